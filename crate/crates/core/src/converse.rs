//! Numerical verifier for the one-shot converse on small instances.
//!
//! For every sender `i` and permutation `u` of the other users, pruning `u`
//! to one representative per requested file yields a set of sub-pieces whose
//! side-information graph is acyclic, hence a lower bound on `H(X_i)`.
//! Summing those bounds over permutations, senders and demands of one type
//! gives a bound linear in the placement profile `x_t`, and its lower convex
//! envelope meets the achievable load.

use std::collections::HashMap;

use itertools::Itertools;
use num_bigint::BigUint;
use num_traits::Zero;
use petgraph::algo::is_cyclic_directed;
use petgraph::graph::DiGraph;
use rayon::prelude::*;

use crate::bounds::d2d_per_profile;
use crate::combinatorics::{
    big, choose, factorial, fmt_float, int, lower_convex_envelope, to_f64, Composition, Rational,
};
use crate::delivery::DemandVector;
use crate::error::{Error, Result};
use crate::subset::UserSet;

/// Largest `K` for which the `K * (K-1)!` enumeration is attempted.
pub const MAX_LEDGER_USERS: usize = 6;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrunedPermutation {
    pub source: Vec<usize>,
    pub pruned: Vec<usize>,
}

/// Keeps the leftmost user of `u` for each requested file.
pub fn prune(u: &[usize], demand: &DemandVector) -> PrunedPermutation {
    let mut seen = vec![false; demand.files()];
    let pruned = u
        .iter()
        .copied()
        .filter(|&k| !std::mem::replace(&mut seen[demand.file_of(k)], true))
        .collect();
    PrunedPermutation {
        source: u.to_vec(),
        pruned,
    }
}

/// Sizes of sub-pieces `W_{q,V,i}` in units of `F`.
pub trait SubPieceSizes {
    fn size(&self, file: usize, holders: UserSet, owner: usize) -> Rational;
}

impl<F: Fn(usize, UserSet, usize) -> Rational> SubPieceSizes for F {
    fn size(&self, file: usize, holders: UserSet, owner: usize) -> Rational {
        self(file, holders, owner)
    }
}

/// The one-shot scheme: `1/(t C(K,t))` on `t`-subsets, nothing elsewhere.
#[derive(Clone, Copy, Debug)]
pub struct UniformSizes {
    pub users: usize,
    pub t: usize,
}

impl SubPieceSizes for UniformSizes {
    fn size(&self, _file: usize, holders: UserSet, _owner: usize) -> Rational {
        if holders.len() == self.t {
            Rational::from_integer(1.into()) / (int(self.t as i64) * big(&choose(self.users as u64, self.t as u64)))
        } else {
            Rational::zero()
        }
    }
}

/// The demanded sub-pieces selected by a pruned permutation: at level `j`,
/// `W_{d_{f_j}, V, i}` for every `V` containing `i` and avoiding `f_1..f_j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct AuditNode {
    pub demander: usize,
    pub file: usize,
    pub holders: UserSet,
    pub owner: usize,
}

pub fn level_nodes(sender: usize, pruned: &PrunedPermutation, demand: &DemandVector) -> Vec<AuditNode> {
    let all = UserSet::full(demand.users());
    let mut excluded = UserSet::EMPTY;
    let mut nodes = Vec::new();
    for &f in &pruned.pruned {
        excluded = excluded.with(f);
        let free = all.difference(excluded).without(sender);
        for extra in free.all_subsets() {
            nodes.push(AuditNode {
                demander: f,
                file: demand.file_of(f),
                holders: extra.with(sender),
                owner: sender,
            });
        }
    }
    nodes
}

/// Right-hand side of the acyclic bound for sender `i` and permutation `u`.
pub fn acyclic_rhs(sender: usize, u: &[usize], demand: &DemandVector, sizes: &impl SubPieceSizes) -> Rational {
    level_nodes(sender, &prune(u, demand), demand)
        .iter()
        .fold(Rational::zero(), |acc, n| acc + sizes.size(n.file, n.holders, n.owner))
}

/// `true` when the side-information digraph has no directed cycle. Node `a`
/// points to node `b` when `b`'s demander caches `a`.
pub fn is_acyclic(nodes: &[AuditNode]) -> bool {
    let mut g = DiGraph::<(), ()>::with_capacity(nodes.len(), 0);
    let idx: Vec<_> = nodes.iter().map(|_| g.add_node(())).collect();
    for (a, na) in nodes.iter().enumerate() {
        for (b, nb) in nodes.iter().enumerate() {
            if na.holders.contains(nb.demander) {
                g.add_edge(idx[a], idx[b], ());
            }
        }
    }
    !is_cyclic_directed(&g)
}

pub fn acyclicity_audit(sender: usize, u: &[usize], demand: &DemandVector) -> bool {
    is_acyclic(&level_nodes(sender, &prune(u, demand), demand))
}

/// The audit's node set plus two mutually cached demands, which must close a
/// cycle.
pub fn negative_control(sender: usize, u: &[usize], demand: &DemandVector) -> Vec<AuditNode> {
    let mut nodes = level_nodes(sender, &prune(u, demand), demand);
    let a = u[0];
    let b = u.iter().copied().find(|&x| x != a).unwrap_or(sender);
    nodes.push(AuditNode {
        demander: a,
        file: demand.file_of(a),
        holders: UserSet::singleton(sender).with(b).without(a),
        owner: sender,
    });
    nodes.push(AuditNode {
        demander: b,
        file: demand.file_of(b),
        holders: UserSet::singleton(sender).with(a).without(b),
        owner: sender,
    });
    nodes
}

fn others(users: usize, sender: usize) -> Vec<usize> {
    (0..users).filter(|&k| k != sender).collect()
}

fn check_feasible(users: usize) -> Result<()> {
    if !(2..=MAX_LEDGER_USERS).contains(&users) {
        return Err(Error::Infeasible(format!(
            "permutation ledger needs 2 <= K <= {MAX_LEDGER_USERS}, got K={users}"
        )));
    }
    Ok(())
}

/// Appearance counts `a^{k,i}_V`: how many of the `(K-1)!` permutations for
/// sender `i` put `W_{d_k,V,i}` in the bound.
#[derive(Clone, Debug, Default)]
pub struct CoefficientLedger {
    pub users: usize,
    pub counts: HashMap<(usize, usize, UserSet), u64>,
}

impl CoefficientLedger {
    pub fn get(&self, k: usize, i: usize, holders: UserSet) -> u64 {
        self.counts.get(&(k, i, holders)).copied().unwrap_or(0)
    }

    /// `a^{k,i1}_V == a^{k,i2}_V` for all `i1, i2` in `V`, `k` outside `V`.
    pub fn symmetric(&self) -> bool {
        self.symmetry_violations().is_empty()
    }

    pub fn symmetry_violations(&self) -> Vec<(usize, UserSet)> {
        let mut bad = Vec::new();
        for k in 0..self.users {
            for v in UserSet::full(self.users).without(k).all_subsets() {
                let mut members = v.iter();
                let Some(first) = members.next() else { continue };
                let base = self.get(k, first, v);
                if members.any(|i| self.get(k, i, v) != base) {
                    bad.push((k, v));
                }
            }
        }
        bad
    }
}

/// Brute-force ledger for one demand.
pub fn ledger_build(demand: &DemandVector) -> Result<CoefficientLedger> {
    let users = demand.users();
    check_feasible(users)?;
    let per_sender: Vec<HashMap<(usize, usize, UserSet), u64>> = (0..users)
        .into_par_iter()
        .map(|i| {
            let mut counts = HashMap::new();
            let rest = others(users, i);
            for u in rest.iter().copied().permutations(rest.len()) {
                for node in level_nodes(i, &prune(&u, demand), demand) {
                    *counts.entry((node.demander, i, node.holders)).or_insert(0) += 1;
                }
            }
            counts
        })
        .collect();
    let mut counts = HashMap::new();
    for part in per_sender {
        for (key, c) in part {
            *counts.entry(key).or_insert(0) += c;
        }
    }
    Ok(CoefficientLedger { users, counts })
}

/// Every demand vector of the given type.
pub fn demands_of_type(composition: &Composition) -> Vec<DemandVector> {
    DemandVector::all(composition.files(), composition.users())
        .filter(|d| d.composition() == *composition)
        .collect()
}

/// Ledger aggregated over a demand type: `b_{q,V}` and the per-size `b_t`.
#[derive(Clone, Debug)]
pub struct TypeLedger {
    pub composition: Composition,
    pub demands: usize,
    /// `b_{q,V}` keyed by (file, holders), nonempty `V`, `V != [K]`.
    pub b: HashMap<(usize, UserSet), Rational>,
    /// Every demand of the type has `a^{k,i1}_V == a^{k,i2}_V`.
    pub symmetric: bool,
    /// Summed over the type, the counts for `(q, V)` agree for all `i` in `V`.
    pub aggregate_symmetric: bool,
}

impl TypeLedger {
    pub fn build(composition: &Composition) -> Result<Self> {
        let users = composition.users();
        let files = composition.files();
        check_feasible(users)?;
        let demands = demands_of_type(composition);
        let ledgers: Vec<(DemandVector, CoefficientLedger)> = demands
            .into_iter()
            .map(|d| ledger_build(&d).map(|l| (d, l)))
            .collect::<Result<_>>()?;
        let norm = big(&factorial(users as u64 - 1));
        let mut b = HashMap::new();
        let symmetric = ledgers.iter().all(|(_, l)| l.symmetric());
        let mut aggregate_symmetric = true;
        for q in 0..files {
            for v in UserSet::full(users).all_subsets() {
                let totals: Vec<u64> = v
                    .iter()
                    .map(|i| {
                        let mut total = 0u64;
                        for (d, l) in &ledgers {
                            for k in (0..users).filter(|&k| !v.contains(k) && d.file_of(k) == q) {
                                total += l.get(k, i, v);
                            }
                        }
                        total
                    })
                    .collect();
                let Some(&first) = totals.first() else { continue };
                aggregate_symmetric &= totals.iter().all(|&x| x == first);
                b.insert((q, v), int(first as i64) / &norm);
            }
        }
        Ok(TypeLedger {
            composition: composition.clone(),
            demands: ledgers.len(),
            b,
            symmetric,
            aggregate_symmetric,
        })
    }

    /// `b_t` when `b_{q,V}` depends on `V` only through `|V| = t`.
    pub fn b_of_size(&self, t: usize) -> Option<Rational> {
        let mut vals = self.b.iter().filter(|((_, v), _)| v.len() == t).map(|(_, x)| x);
        let first = vals.next()?.clone();
        vals.all(|x| *x == first).then_some(first)
    }

    pub fn depends_only_on_size(&self) -> bool {
        (1..=self.composition.users()).all(|t| self.b_of_size(t).is_some())
    }

    /// `t N C(K,t) b_t == |D_s| sum_i [C(K-1,t) - C(K-1-N_e(d_{\i}),t)]`.
    pub fn closed_form_holds(&self, t: usize) -> bool {
        let users = self.composition.users();
        let files = self.composition.files();
        let Some(bt) = self.b_of_size(t) else {
            return false;
        };
        let lhs = int((t * files) as i64) * big(&choose(users as u64, t as u64)) * bt;
        let d = DemandVector::new(self.composition.representative(), files).expect("representative demand is valid");
        let per_demand: BigUint = (0..users)
            .map(|i| {
                let k1 = users as u64 - 1;
                choose(k1, t as u64) - choose(k1 - d.distinct_excluding(i) as u64, t as u64)
            })
            .sum();
        lhs == int(self.demands as i64) * big(&per_demand)
    }

    /// `r_{t,s} = N b_t / |D_s|` for `t = 1..=K`.
    pub fn r_values(&self) -> Result<Vec<Rational>> {
        let files = self.composition.files() as i64;
        (1..=self.composition.users())
            .map(|t| {
                self.b_of_size(t)
                    .map(|bt| int(files) * bt / int(self.demands as i64))
                    .ok_or_else(|| Error::Infeasible(format!("b_{{q,V}} is not a function of |V| at t={t}")))
            })
            .collect()
    }
}

/// Converse for one type, from both the envelope and the two-point LP.
#[derive(Clone, Debug)]
pub struct ConverseReport {
    pub composition: Composition,
    pub r: Vec<Rational>,
    pub t: Rational,
    pub envelope_value: Rational,
    pub lp_value: Rational,
    pub achievable: Option<Rational>,
}

impl ConverseReport {
    pub fn tight(&self) -> bool {
        self.envelope_value == self.lp_value && self.achievable.as_ref() == Some(&self.envelope_value)
    }

    pub fn convex_nonincreasing(&self) -> bool {
        let r = &self.r;
        r.windows(2).all(|w| w[1] <= w[0]) && r.windows(3).all(|w| &w[0] + &w[2] >= &w[1] + &w[1])
    }
}

/// `min sum_t x_t r_t` with `sum x_t = 1`, `sum t x_t = t0`, `x >= 0`, by
/// enumerating supports of size at most two.
pub fn lp_min(r: &[Rational], t0: &Rational) -> Option<Rational> {
    let ts: Vec<Rational> = (1..=r.len()).map(|t| int(t as i64)).collect();
    let mut best: Option<Rational> = None;
    for a in 0..r.len() {
        for b in a..r.len() {
            let v = if a == b {
                if ts[a] != *t0 {
                    continue;
                }
                r[a].clone()
            } else {
                if *t0 < ts[a] || *t0 > ts[b] {
                    continue;
                }
                let lambda = (&ts[b] - t0) / (&ts[b] - &ts[a]);
                &lambda * &r[a] + (int(1) - &lambda) * &r[b]
            };
            best = Some(match best {
                Some(x) if x <= v => x,
                _ => v,
            });
        }
    }
    best
}

/// Evaluates `Conv(r_{t,s})` at `t0 = KM/N` for one demand type.
pub fn converse_value(composition: &Composition, t0: &Rational) -> Result<ConverseReport> {
    let users = composition.users();
    let ledger = TypeLedger::build(composition)?;
    let r = ledger.r_values()?;
    let points: Vec<(Rational, Rational)> = r
        .iter()
        .enumerate()
        .map(|(j, v)| (int(j as i64 + 1), v.clone()))
        .collect();
    let envelope = lower_convex_envelope(&points)?;
    let envelope_value = envelope
        .eval(t0)
        .ok_or_else(|| Error::InvalidScenario(format!("t = {t0} outside [1, {users}]")))?;
    let lp_value = lp_min(&r, t0).expect("t0 inside range has a feasible support");
    let achievable = t0
        .is_integer()
        .then(|| t0.to_integer().to_string().parse::<usize>().ok())
        .flatten()
        .map(|t| d2d_per_profile(users, t, composition.profile()));
    Ok(ConverseReport {
        composition: composition.clone(),
        r,
        t: t0.clone(),
        envelope_value,
        lp_value,
        achievable,
    })
}

pub const CONVERSE_CSV_HEADER: &str = "type,t,r_num,r_den,achievable_num,achievable_den,equal";

/// `3-1` style label for a type (zero multiplicities dropped).
pub fn type_label(composition: &Composition) -> String {
    composition
        .counts()
        .iter()
        .filter(|&&c| c > 0)
        .map(|c| c.to_string())
        .join("-")
}

/// Per-type rows for every integer `t`; also returns whether all are equal.
pub fn report_rows(files: usize, users: usize) -> Result<(Vec<String>, bool)> {
    check_feasible(users)?;
    let mut rows = Vec::new();
    let mut all_equal = true;
    for (composition, _) in crate::combinatorics::enumerate_compositions(files, users) {
        let ledger = TypeLedger::build(&composition)?;
        let r = ledger.r_values()?;
        for (j, rt) in r.iter().enumerate() {
            let t = j + 1;
            let ach = d2d_per_profile(users, t, composition.profile());
            let eq = *rt == ach;
            all_equal &= eq;
            rows.push(format!(
                "{},{},{},{},{},{},{}",
                type_label(&composition),
                t,
                rt.numer(),
                rt.denom(),
                ach.numer(),
                ach.denom(),
                eq
            ));
        }
    }
    Ok((rows, all_equal))
}

/// Human-readable summary of a report.
pub fn describe(report: &ConverseReport) -> String {
    format!(
        "type {} t={} converse={} ({}) lp={} achievable={}",
        type_label(&report.composition),
        report.t,
        report.envelope_value,
        fmt_float(to_f64(&report.envelope_value)),
        report.lp_value,
        report
            .achievable
            .as_ref()
            .map(|a| a.to_string())
            .unwrap_or_else(|| "-".into())
    )
}
