//! Exact combinatorial primitives: binomials, demand compositions, demand
//! profiles and lower convex envelopes over exact rationals.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact rational in lowest terms with positive denominator.
pub type Rational = num_rational::BigRational;

pub fn rational(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

pub fn big(value: &BigUint) -> Rational {
    Rational::from_integer(BigInt::from(value.clone()))
}

pub fn to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// Binomial coefficient with the convention `binom(x, y) = 0` whenever
/// `x < y` or `x <= 0` (so `binom(0, 0) = 0` as well). Negative `y` also
/// yields 0.
pub fn binom(x: i64, y: i64) -> BigUint {
    if x < y || x <= 0 || y < 0 {
        return BigUint::zero();
    }
    choose(x as u64, y as u64)
}

/// [`binom`] as a rational.
pub fn binom_q(x: i64, y: i64) -> Rational {
    big(&binom(x, y))
}

/// Ordinary subset count `n choose k` (`choose(0, 0) = 1`), used where a
/// quantity literally counts sets rather than evaluating a load formula.
pub fn choose(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for j in 0..k {
        acc *= n - j;
        acc /= j + 1;
    }
    acc
}

pub fn factorial(n: u64) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, j| acc * j)
}

/// Request multiplicities of a demand, sorted non-increasing and padded to `N`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Composition(Vec<usize>);

impl Composition {
    /// Builds a composition from raw counts (any order); validates the total.
    pub fn new(mut counts: Vec<usize>, users: usize) -> Result<Self> {
        if counts.iter().sum::<usize>() != users {
            return Err(Error::InvalidDemand(format!(
                "composition {counts:?} does not sum to K = {users}"
            )));
        }
        counts.sort_unstable_by(|a, b| b.cmp(a));
        Ok(Composition(counts))
    }

    pub fn counts(&self) -> &[usize] {
        &self.0
    }

    pub fn users(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn files(&self) -> usize {
        self.0.len()
    }

    /// Number of distinct requested files, `N_e(d)`.
    pub fn distinct(&self) -> usize {
        self.0.iter().filter(|&&c| c > 0).count()
    }

    /// Number of users that are the only requester of their file.
    pub fn unique_demanders(&self) -> usize {
        self.0.iter().filter(|&&c| c == 1).count()
    }

    pub fn profile(&self) -> DemandProfile {
        DemandProfile {
            distinct: self.distinct(),
            unique: self.unique_demanders(),
        }
    }

    /// Number of demand vectors with this composition, `|D_s|`.
    pub fn demand_count(&self) -> BigUint {
        let k = self.users() as u64;
        let n = self.files() as u64;
        let users = self.0.iter().fold(factorial(k), |acc, &c| acc / factorial(c as u64));
        let mut multiplicity: BTreeMap<usize, u64> = BTreeMap::new();
        for &c in &self.0 {
            *multiplicity.entry(c).or_default() += 1;
        }
        let files = multiplicity.values().fold(factorial(n), |acc, &m| acc / factorial(m));
        users * files
    }

    /// A representative demand vector (0-based files): file 0 requested by
    /// the first `counts[0]` users, file 1 by the next block, and so on.
    pub fn representative(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .flat_map(|(file, &c)| std::iter::repeat_n(file, c))
            .collect()
    }
}

impl fmt::Display for Composition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|c| c.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Composition of a 0-based demand vector over `n_files` files.
pub fn composition_of(demand: &[usize], n_files: usize) -> Composition {
    let mut counts = vec![0usize; n_files];
    for &file in demand {
        counts[file] += 1;
    }
    counts.sort_unstable_by(|a, b| b.cmp(a));
    Composition(counts)
}

/// Every composition of `K` users over `N` files with its demand count.
/// Counts sum to `N^K`.
pub fn enumerate_compositions(n_files: usize, users: usize) -> Vec<(Composition, BigUint)> {
    let mut out = Vec::new();
    let mut parts = Vec::with_capacity(n_files);
    partitions(users, users, n_files, &mut parts, &mut |p| {
        let mut counts = p.to_vec();
        counts.resize(n_files, 0);
        let comp = Composition(counts);
        let weight = comp.demand_count();
        out.push((comp, weight));
    });
    out
}

fn partitions(remaining: usize, max_part: usize, slots: usize, parts: &mut Vec<usize>, emit: &mut dyn FnMut(&[usize])) {
    if remaining == 0 {
        emit(parts);
        return;
    }
    if slots == 0 {
        return;
    }
    for part in (1..=max_part.min(remaining)).rev() {
        parts.push(part);
        partitions(remaining - part, part, slots - 1, parts, emit);
        parts.pop();
    }
}

/// The two statistics every load formula depends on: `N_e(d)` and the
/// number of unique demanders. Users that are unique demanders see
/// `N_e(d_{\k}) = N_e(d) - 1`; every other user sees `N_e(d)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DemandProfile {
    pub distinct: usize,
    pub unique: usize,
}

/// Exact distribution of [`DemandProfile`] over all `N^K` demands.
///
/// Counts demands with `e` distinct files of which `u` are requested once:
/// `C(N,e) C(e,u) K!/(K-u)! * T(K-u, e-u)`, where `T(n, j)` counts ordered
/// splits of `n` labelled users into `j` labelled groups of size at least two.
/// Scales to `N = 50, K = 100`, where enumerating compositions does not.
pub fn demand_profiles(n_files: usize, users: usize) -> Vec<(DemandProfile, BigUint)> {
    // g[n][j]: partitions of n labelled items into j unlabelled blocks of size >= 2.
    let k = users;
    let mut g = vec![vec![BigUint::zero(); k + 1]; k + 1];
    g[0][0] = BigUint::one();
    for n in 1..=k {
        for j in 1..=n / 2 {
            let mut v = &g[n - 1][j] * BigUint::from(j);
            if n >= 2 {
                v += &g[n - 2][j - 1] * BigUint::from(n - 1);
            }
            g[n][j] = v;
        }
    }
    let mut out = Vec::new();
    for distinct in 1..=n_files.min(users) {
        let pick_files = choose(n_files as u64, distinct as u64);
        for unique in 0..=distinct {
            if unique > users {
                continue;
            }
            let rest = users - unique;
            let groups = distinct - unique;
            let blocks = &g[rest][groups];
            if blocks.is_zero() {
                continue;
            }
            let ordered_singles = factorial(users as u64) / factorial(rest as u64);
            let count = &pick_files
                * choose(distinct as u64, unique as u64)
                * ordered_singles
                * blocks
                * factorial(groups as u64);
            out.push((DemandProfile { distinct, unique }, count));
        }
    }
    out
}

/// Expectation of `f(profile)` under uniformly random demands.
pub fn expect_over_demands(n_files: usize, users: usize, f: impl Fn(DemandProfile) -> Rational) -> Rational {
    let total = BigUint::from(n_files).pow(users as u32);
    let sum = demand_profiles(n_files, users)
        .into_iter()
        .fold(Rational::zero(), |acc, (p, count)| acc + f(p) * big(&count));
    sum / big(&total)
}

/// Piecewise-linear lower convex envelope of a set of `(M, R)` points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConvexEnvelope {
    vertices: Vec<(Rational, Rational)>,
}

impl ConvexEnvelope {
    pub fn vertices(&self) -> &[(Rational, Rational)] {
        &self.vertices
    }

    pub fn domain(&self) -> (&Rational, &Rational) {
        (&self.vertices[0].0, &self.vertices[self.vertices.len() - 1].0)
    }

    /// Linear interpolation between hull vertices; `None` outside the range.
    pub fn eval(&self, m: &Rational) -> Option<Rational> {
        let (lo, hi) = self.domain();
        if m < lo || m > hi {
            return None;
        }
        for w in self.vertices.windows(2) {
            let (m0, r0) = &w[0];
            let (m1, r1) = &w[1];
            if m >= m0 && m <= m1 {
                let lambda = (m - m0) / (m1 - m0);
                return Some(r0 + (r1 - r0) * lambda);
            }
        }
        Some(self.vertices[0].1.clone())
    }

    /// Slopes between consecutive vertices.
    pub fn slopes(&self) -> Vec<Rational> {
        self.vertices
            .windows(2)
            .map(|w| (&w[1].1 - &w[0].1) / (&w[1].0 - &w[0].0))
            .collect()
    }
}

/// Lower convex hull (monotone chain). Collinear points are kept.
pub fn lower_convex_envelope(points: &[(Rational, Rational)]) -> Result<ConvexEnvelope> {
    if points.is_empty() {
        return Err(Error::Empty("lower_convex_envelope needs at least one point"));
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.0.cmp(&b.0));
    if sorted.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::InvalidScenario(
            "envelope points must have distinct M values".into(),
        ));
    }
    let mut hull: Vec<(Rational, Rational)> = Vec::with_capacity(sorted.len());
    for p in sorted {
        while hull.len() >= 2 {
            let a = &hull[hull.len() - 2];
            let b = &hull[hull.len() - 1];
            // Drop b when it lies strictly above the chord a -> p.
            let cross = (&b.0 - &a.0) * (&p.1 - &a.1) - (&b.1 - &a.1) * (&p.0 - &a.0);
            if cross < Rational::zero() {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    Ok(ConvexEnvelope { vertices: hull })
}

/// Parses `"p/q"`, an integer, or a finite decimal such as `"1.25"` exactly.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let text = text.trim();
    let bad = || Error::Parse(format!("not a rational number: {text:?}"));
    if let Some((num, den)) = text.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| bad())?;
        let den: BigInt = den.trim().parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(num, den));
    }
    if let Some((whole, frac)) = text.split_once('.') {
        let negative = whole.starts_with('-');
        let whole_digits = whole.trim_start_matches(['-', '+']);
        if !frac.chars().all(|c| c.is_ascii_digit()) || frac.is_empty() && whole_digits.is_empty() {
            return Err(bad());
        }
        let digits = format!("{whole_digits}{frac}");
        let mut num: BigInt = if digits.is_empty() {
            BigInt::zero()
        } else {
            digits.parse().map_err(|_| bad())?
        };
        if negative {
            num = -num;
        }
        let den = BigInt::from(10u32).pow(frac.len() as u32);
        return Ok(Rational::new(num, den));
    }
    let num: BigInt = text.parse().map_err(|_| bad())?;
    Ok(Rational::from_integer(num))
}

/// Formats a rational as `p/q` (or `p` when integral).
pub fn fmt_rational(value: &Rational) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

/// `%.15g`-style formatting: 15 significant digits, trailing zeros dropped,
/// scientific notation for very small or large magnitudes.
pub fn fmt_float(value: f64) -> String {
    if value == 0.0 {
        return "0".into();
    }
    if !value.is_finite() {
        return value.to_string();
    }
    let sci = format!("{value:.14e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..15).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mantissa}e{sign}{:02}", exp.abs());
    }
    let decimals = (14 - exp).max(0) as usize;
    trim_zeros(&format!("{value:.decimals$}")).to_string()
}

fn trim_zeros(text: &str) -> &str {
    if text.contains('.') {
        text.trim_end_matches('0').trim_end_matches('.')
    } else {
        text
    }
}

#[cfg(test)]
mod tests {

    #[test]
    fn float_formatting() {
        assert_eq!(fmt_float(3.771529619805482), "3.77152961980548");
        assert_eq!(fmt_float(0.5), "0.5");
        assert_eq!(fmt_float(2.0), "2");
        assert_eq!(fmt_float(3.2e-10), "3.2e-10");
        assert_eq!(fmt_float(-1.25), "-1.25");
        assert_eq!(fmt_float(1e20), "1e+20");
        assert_eq!(fmt_float(0.000123), "0.000123");
    }
    use super::*;

    fn factorial_ratio_binom(n: u64, k: u64) -> BigUint {
        factorial(n) / (factorial(k) * factorial(n - k))
    }

    #[test]
    fn binom_convention() {
        assert_eq!(binom(1, 2), BigUint::zero());
        assert_eq!(binom(29, 6), BigUint::from(475_020u32));
        assert_eq!(binom(29, 6), factorial_ratio_binom(29, 6));
        assert_eq!(binom(-3, 2), BigUint::zero());
        assert_eq!(binom(0, 0), BigUint::zero());
        assert_eq!(binom(5, -1), BigUint::zero());
        assert_eq!(choose(0, 0), BigUint::one());
    }

    #[test]
    fn pascal_rule_under_convention() {
        for x in 1..30i64 {
            for y in 1..30i64 {
                // The rule breaks only where the convention zeroes binom(0, 0).
                if x == 1 && y == 1 {
                    assert_eq!(binom(1, 1), BigUint::one());
                    continue;
                }
                assert_eq!(binom(x, y), binom(x - 1, y - 1) + binom(x - 1, y), "({x},{y})");
            }
        }
    }

    #[test]
    fn composition_examples() {
        assert_eq!(composition_of(&[0, 0, 0, 0, 0], 3).counts(), [5, 0, 0]);
        assert_eq!(composition_of(&[0, 1, 0, 0], 2).counts(), [3, 1]);
        assert_eq!(composition_of(&[1, 2, 1, 0, 2], 3).counts(), [2, 2, 1]);
    }

    #[test]
    fn enumerate_small_cases() {
        let comps = enumerate_compositions(3, 5);
        let shown: Vec<String> = comps.iter().map(|(c, _)| c.to_string()).collect();
        assert_eq!(shown, ["(5,0,0)", "(4,1,0)", "(3,2,0)", "(3,1,1)", "(2,2,1)"]);
        let one = enumerate_compositions(1, 3);
        assert_eq!(one, vec![(Composition(vec![3]), BigUint::one())]);
        let two = enumerate_compositions(2, 2);
        assert_eq!(
            two,
            vec![
                (Composition(vec![2, 0]), BigUint::from(2u32)),
                (Composition(vec![1, 1]), BigUint::from(2u32)),
            ]
        );
    }

    fn all_demands(n: usize, k: usize) -> Vec<Vec<usize>> {
        let total = n.pow(k as u32);
        (0..total)
            .map(|mut code| {
                (0..k)
                    .map(|_| {
                        let f = code % n;
                        code /= n;
                        f
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn composition_counts_cover_all_demands() {
        for n in 1..=6usize {
            for k in 1..=6usize {
                let comps = enumerate_compositions(n, k);
                let total: BigUint = comps.iter().map(|(_, w)| w.clone()).sum();
                assert_eq!(total, BigUint::from(n).pow(k as u32), "N={n} K={k}");
                // brute-force each weight
                let mut brute: BTreeMap<Composition, u64> = BTreeMap::new();
                for d in all_demands(n, k) {
                    *brute.entry(composition_of(&d, n)).or_default() += 1;
                }
                for (c, w) in comps {
                    assert_eq!(BigUint::from(brute[&c]), w, "N={n} K={k} {c}");
                }
            }
        }
    }

    #[test]
    fn demand_profiles_match_enumeration() {
        for n in 1..=5usize {
            for k in 1..=6usize {
                let mut brute: BTreeMap<DemandProfile, u64> = BTreeMap::new();
                for d in all_demands(n, k) {
                    *brute.entry(composition_of(&d, n).profile()).or_default() += 1;
                }
                let profiles: BTreeMap<DemandProfile, BigUint> = demand_profiles(n, k).into_iter().collect();
                assert_eq!(profiles.len(), brute.len(), "N={n} K={k}");
                for (p, c) in brute {
                    assert_eq!(profiles[&p], BigUint::from(c), "N={n} K={k} {p:?}");
                }
            }
        }
    }

    #[test]
    fn demand_profiles_agree_with_compositions_at_scale() {
        let mut from_comps: BTreeMap<DemandProfile, BigUint> = BTreeMap::new();
        for (c, w) in enumerate_compositions(10, 30) {
            *from_comps.entry(c.profile()).or_default() += w;
        }
        let profiles: BTreeMap<DemandProfile, BigUint> = demand_profiles(10, 30).into_iter().collect();
        assert_eq!(from_comps, profiles);
        let total: BigUint = demand_profiles(50, 100).into_iter().map(|(_, c)| c).sum();
        assert_eq!(total, BigUint::from(50u32).pow(100));
    }

    #[test]
    fn envelope_examples() {
        let pts = |v: &[(i64, i64, i64)]| -> Vec<(Rational, Rational)> {
            v.iter().map(|&(m, r, d)| (int(m), rational(r, d))).collect()
        };
        let env = lower_convex_envelope(&pts(&[(0, 2, 1), (1, 1, 1), (2, 0, 1)])).unwrap();
        assert_eq!(env.vertices().len(), 3);
        let env = lower_convex_envelope(&pts(&[(0, 2, 1), (1, 9, 5), (2, 0, 1)])).unwrap();
        assert_eq!(env.vertices().len(), 2);
        assert_eq!(env.eval(&int(1)), Some(int(1)));
        assert_eq!(env.eval(&int(3)), None);
        assert!(lower_convex_envelope(&[]).is_err());
        let single = lower_convex_envelope(&pts(&[(1, 3, 1)])).unwrap();
        assert_eq!(single.eval(&int(1)), Some(int(3)));
    }

    #[test]
    fn parse_rationals() {
        assert_eq!(parse_rational("2/3").unwrap(), rational(2, 3));
        assert_eq!(parse_rational("1.25").unwrap(), rational(5, 4));
        assert_eq!(parse_rational("4").unwrap(), int(4));
        assert_eq!(parse_rational(".5").unwrap(), rational(1, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert_eq!(fmt_rational(&rational(22, 24)), "11/12");
        assert_eq!(fmt_rational(&int(0)), "0");
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn envelope_is_convex_and_below_points(
                raw in proptest::collection::btree_map(0i64..40, 0i64..200, 1..12)
            ) {
                let pts: Vec<(Rational, Rational)> =
                    raw.iter().map(|(&m, &r)| (int(m), rational(r, 7))).collect();
                let env = lower_convex_envelope(&pts).unwrap();
                let slopes = env.slopes();
                prop_assert!(slopes.windows(2).all(|w| w[0] <= w[1]));
                for (m, r) in &pts {
                    prop_assert!(env.eval(m).unwrap() <= *r);
                }
            }

            #[test]
            fn composition_is_permutation_and_relabel_invariant(
                demand in proptest::collection::vec(0usize..4, 1..8),
                shift in 0usize..4,
            ) {
                let base = composition_of(&demand, 4);
                let mut rev = demand.clone();
                rev.reverse();
                prop_assert_eq!(&composition_of(&rev, 4), &base);
                let relabeled: Vec<usize> = demand.iter().map(|f| (f + shift) % 4).collect();
                prop_assert_eq!(&composition_of(&relabeled, 4), &base);
            }
        }
    }
}
