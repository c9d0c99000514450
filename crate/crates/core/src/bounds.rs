//! Closed-form loads and converse bounds, and memory-sharing trade-off curves.
//!
//! Achievable loads are indexed by the integer cache parameter `t = KM/N`;
//! converse bounds take an arbitrary rational `M`.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::combinatorics::{
    binom_q, enumerate_compositions, expect_over_demands, fmt_float, fmt_rational, int, lower_convex_envelope,
    rational, to_f64, ConvexEnvelope, DemandProfile, Rational,
};
use crate::delivery::DemandVector;
use crate::error::{Error, Result};

fn k_and_t(users: usize, t: usize) -> (i64, i64) {
    (users as i64, t as i64)
}

/// `min{(K - t)/t, N_e}`.
pub fn ji_load(users: usize, t: usize, distinct: usize) -> Rational {
    let (k, t) = k_and_t(users, t);
    let coded = rational(k - t, t);
    coded.min(int(distinct as i64))
}

pub fn ji_worst(files: usize, users: usize, t: usize) -> Rational {
    ji_load(users, t, files.min(users))
}

pub fn ji_average(files: usize, users: usize, t: usize) -> Rational {
    expect_over_demands(files, users, |p| ji_load(users, t, p.distinct))
}

/// `t = KM/N` as an exact rational.
pub fn t_of(files: usize, users: usize, memory: &Rational) -> Rational {
    memory * int(users as i64) / int(files as i64)
}

/// Cut-set converse at memory `M`.
pub fn cutset_bound(files: usize, users: usize, memory: &Rational) -> Rational {
    let mut best = Rational::zero();
    for l in 1..=files.min(users) {
        let l_q = int(l as i64);
        let v = &l_q - &l_q * memory / int((files / l) as i64);
        best = best.max(v);
    }
    if users > 1 && files > 1 {
        let t = t_of(files, users, memory);
        let v = (int(users as i64) - t) / int(users as i64 - 1);
        best = best.max(v);
    }
    best
}

fn ceil_div(a: usize, b: usize) -> usize {
    a.div_ceil(b)
}

/// Converse of Sengupta et al., maximised over `s` and `l`.
pub fn sengupta_bound(files: usize, users: usize, memory: &Rational) -> Rational {
    let n = files as i64;
    let k = users as i64;
    let mut best: Option<Rational> = None;
    for s in 1..=users {
        for l in 1..=ceil_div(files, s) {
            let denom = rational(l as i64 * (k - s as i64), k);
            if denom <= Rational::zero() {
                continue;
            }
            let mu = ceil_div(files, l).min(users) as i64 - s as i64;
            let slack = (n - (l * s) as i64).max(0);
            let numer = int(n) - int(s as i64) * memory - rational(mu, s as i64 + mu) * int(slack);
            let v = numer / denom;
            best = Some(match best {
                Some(b) => b.max(v),
                None => v,
            });
        }
    }
    best.unwrap_or_else(Rational::zero)
}

/// Shared-link MAN load with `N_e` distinct requests.
pub fn shared_link_per_demand(users: usize, t: usize, distinct: usize) -> Rational {
    let (k, t) = k_and_t(users, t);
    (binom_q(k, t + 1) - binom_q(k - distinct as i64, t + 1)) / binom_q(k, t)
}

pub fn shared_link_average(files: usize, users: usize, t: usize) -> Rational {
    expect_over_demands(files, users, |p| shared_link_per_demand(users, t, p.distinct))
}

pub fn shared_link_worst(files: usize, users: usize, t: usize) -> Rational {
    shared_link_per_demand(users, t, files.min(users))
}

/// One-shot D2D load for a demand profile.
pub fn d2d_per_profile(users: usize, t: usize, profile: DemandProfile) -> Rational {
    let (k, t) = k_and_t(users, t);
    let ne = profile.distinct as i64;
    let u = profile.unique as i64;
    let missing = int(u) * binom_q(k - ne, t) + int(k - u) * binom_q(k - 1 - ne, t);
    (binom_q(k - 1, t) - missing / int(k)) / binom_q(k - 1, t - 1)
}

pub fn d2d_per_demand(users: usize, t: usize, demand: &DemandVector) -> Rational {
    d2d_per_profile(users, t, demand.composition().profile())
}

pub fn d2d_average_optimal(files: usize, users: usize, t: usize) -> Rational {
    expect_over_demands(files, users, |p| d2d_per_profile(users, t, p))
}

/// Peak one-shot D2D load.
pub fn d2d_worst_optimal(files: usize, users: usize, t: usize) -> Rational {
    let (k, t) = k_and_t(users, t);
    let n = files as i64;
    let base = binom_q(k - 1, t - 1);
    if k <= n {
        binom_q(k - 1, t) / base
    } else if k >= 2 * n {
        (binom_q(k - 1, t) - binom_q(k - 1 - n, t)) / base
    } else {
        let lost = rational(2 * n - k, k) * binom_q(k - n, t) + rational(2 * (k - n), k) * binom_q(k - 1 - n, t);
        (binom_q(k - 1, t) - lost) / base
    }
}

/// `max` of [`d2d_per_demand`] over every demand type, by enumeration.
pub fn d2d_worst_exhaustive(files: usize, users: usize, t: usize) -> Rational {
    enumerate_compositions(files, users)
        .into_iter()
        .map(|(c, _)| d2d_per_profile(users, t, c.profile()))
        .max()
        .expect("at least one composition")
}

/// `(R_sl_avg, t/(t+1) * R_d2d_avg)`; the first dominates the second.
pub fn order_optimality_margin(files: usize, users: usize, t: usize) -> (Rational, Rational) {
    let sl = shared_link_average(files, users, t);
    let d2d = d2d_average_optimal(files, users, t);
    (sl, rational(t as i64, t as i64 + 1) * d2d)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CurveKind {
    ProposedWorst,
    ProposedAverage,
    SharedLinkWorst,
    SharedLinkAverage,
    JiWorst,
    JiAverage,
    CutSet,
    Sengupta,
}

impl CurveKind {
    pub const ALL: [CurveKind; 8] = [
        CurveKind::ProposedWorst,
        CurveKind::SharedLinkWorst,
        CurveKind::JiWorst,
        CurveKind::CutSet,
        CurveKind::Sengupta,
        CurveKind::ProposedAverage,
        CurveKind::SharedLinkAverage,
        CurveKind::JiAverage,
    ];

    pub fn label(self) -> &'static str {
        match self {
            CurveKind::ProposedWorst => "proposed_worst",
            CurveKind::ProposedAverage => "proposed_average",
            CurveKind::SharedLinkWorst => "shared_link_worst",
            CurveKind::SharedLinkAverage => "shared_link_average",
            CurveKind::JiWorst => "ji_worst",
            CurveKind::JiAverage => "ji_average",
            CurveKind::CutSet => "cutset",
            CurveKind::Sengupta => "sengupta",
        }
    }

    /// Lower bounds are evaluated pointwise rather than from corner points.
    pub fn is_converse(self) -> bool {
        matches!(self, CurveKind::CutSet | CurveKind::Sengupta)
    }

    /// Value at the integer cache parameter `t`.
    pub fn corner(self, files: usize, users: usize, t: usize) -> Rational {
        match self {
            CurveKind::ProposedWorst => d2d_worst_optimal(files, users, t),
            CurveKind::ProposedAverage => d2d_average_optimal(files, users, t),
            CurveKind::SharedLinkWorst => shared_link_worst(files, users, t),
            CurveKind::SharedLinkAverage => shared_link_average(files, users, t),
            CurveKind::JiWorst => ji_worst(files, users, t),
            CurveKind::JiAverage => ji_average(files, users, t),
            CurveKind::CutSet | CurveKind::Sengupta => {
                let m = rational((t * files) as i64, users as i64);
                self.bound(files, users, &m)
            }
        }
    }

    fn bound(self, files: usize, users: usize, memory: &Rational) -> Rational {
        match self {
            CurveKind::CutSet => cutset_bound(files, users, memory),
            CurveKind::Sengupta => sengupta_bound(files, users, memory),
            _ => unreachable!("only converse curves are evaluated pointwise"),
        }
    }
}

impl fmt::Display for CurveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for CurveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CurveKind::ALL
            .into_iter()
            .find(|c| c.label() == s)
            .ok_or_else(|| Error::Parse(format!("unknown curve {s:?}")))
    }
}

/// Corner points `(tN/K, R)` for `t = 1..=K` and their lower convex envelope.
#[derive(Clone, Debug)]
pub struct TradeoffCurve {
    pub kind: CurveKind,
    pub files: usize,
    pub users: usize,
    pub corners: Vec<(Rational, Rational)>,
    pub envelope: ConvexEnvelope,
}

impl TradeoffCurve {
    pub fn new(kind: CurveKind, files: usize, users: usize) -> Result<Self> {
        if users < 2 || files < 1 {
            return Err(Error::InvalidScenario(format!(
                "need N >= 1 and K >= 2, got N={files}, K={users}"
            )));
        }
        let corners: Vec<(Rational, Rational)> = (1..=users)
            .map(|t| (rational((t * files) as i64, users as i64), kind.corner(files, users, t)))
            .collect();
        TradeoffCurve::from_corners(kind, files, users, corners)
    }

    pub fn from_corners(
        kind: CurveKind,
        files: usize,
        users: usize,
        corners: Vec<(Rational, Rational)>,
    ) -> Result<Self> {
        let envelope = lower_convex_envelope(&corners)?;
        Ok(TradeoffCurve {
            kind,
            files,
            users,
            corners,
            envelope,
        })
    }

    /// Corner value when `M` is a corner, otherwise the envelope. Converse
    /// curves are evaluated directly.
    pub fn value_at(&self, memory: &Rational) -> Option<Rational> {
        if self.kind.is_converse() {
            return Some(self.kind.bound(self.files, self.users, memory));
        }
        self.corners
            .iter()
            .find(|(m, _)| m == memory)
            .map(|(_, r)| r.clone())
            .or_else(|| self.envelope.eval(memory))
    }

    /// Memory-sharing value.
    pub fn envelope_at(&self, memory: &Rational) -> Option<Rational> {
        if self.kind.is_converse() {
            return Some(self.kind.bound(self.files, self.users, memory));
        }
        self.envelope.eval(memory)
    }
}

/// One CSV row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CurveRow {
    pub curve: String,
    pub memory: Rational,
    pub load: Rational,
}

pub const CURVE_CSV_HEADER: &str = "curve,M_num,M_den,R_num,R_den,R_float";

impl CurveRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.curve,
            self.memory.numer(),
            self.memory.denom(),
            self.load.numer(),
            self.load.denom(),
            fmt_float(to_f64(&self.load))
        )
    }
}

impl fmt::Display for CurveRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} M={} R={}",
            self.curve,
            fmt_rational(&self.memory),
            fmt_rational(&self.load)
        )
    }
}

/// Evenly spaced grid `start, start + step, .., <= stop`.
pub fn memory_grid(start: &Rational, step: &Rational, stop: &Rational) -> Result<Vec<Rational>> {
    if *step <= Rational::zero() {
        return Err(Error::Parse("grid step must be positive".into()));
    }
    let mut out = Vec::new();
    let mut m = start.clone();
    while m <= *stop {
        out.push(m.clone());
        m += step;
    }
    Ok(out)
}

/// Parses `start:step:stop` with rational components.
pub fn parse_grid(text: &str) -> Result<Vec<Rational>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Parse(format!("grid must be start:step:stop, got {text:?}")));
    }
    let parse = crate::combinatorics::parse_rational;
    memory_grid(&parse(parts[0])?, &parse(parts[1])?, &parse(parts[2])?)
}

/// Rows for every curve over `grid`, skipping points outside a curve's range.
pub fn curve_rows(files: usize, users: usize, grid: &[Rational]) -> Result<Vec<CurveRow>> {
    let mut rows = Vec::new();
    for kind in CurveKind::ALL {
        let curve = TradeoffCurve::new(kind, files, users)?;
        for m in grid {
            if let Some(r) = curve.value_at(m) {
                rows.push(CurveRow {
                    curve: kind.label().into(),
                    memory: m.clone(),
                    load: r,
                });
            }
        }
    }
    Ok(rows)
}

/// Default grid: every corner `M = tN/K`.
pub fn corner_grid(files: usize, users: usize) -> Vec<Rational> {
    (1..=users)
        .map(|t| rational((t * files) as i64, users as i64))
        .collect()
}

/// Integer `t` when `KM/N` is integral.
pub fn integer_t(files: usize, users: usize, memory: &Rational) -> Option<usize> {
    let t = t_of(files, users, memory);
    if t.denom().is_one() && t.numer() >= &BigInt::zero() {
        t.numer().to_string().parse().ok()
    } else {
        None
    }
}
