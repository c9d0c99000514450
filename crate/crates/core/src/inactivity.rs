//! Robustness to inactive users through MDS precoding.
//!
//! Each file is split into `m` blocks and encoded into `n = t C(K,t)` coded
//! blocks, one per sub-piece slot `W'_{q,V,k}`. Placement and delivery then
//! run unchanged on the coded sub-pieces. An active user caches
//! `t C(K-1,t-1)` coded blocks of its file and receives `C(K-2,t-1)` from
//! every other active user, so with `m = t C(K-1,t-1) + (K-1-a) C(K-2,t-1)`
//! it decodes whenever at most `a` users are inactive.

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bits::BitBlock;
use crate::bounds::CurveKind;
use crate::combinatorics::{big, choose, int, rational, to_f64, Rational};
use crate::delivery::{recover_from_sender, transmit_with, DeliveryOptions, DemandVector, LeaderRule};
use crate::erasure::ErasureCode;
use crate::error::{Error, Result};
use crate::placement::{file_bits_from_seed, man_placement, SubPieceStore};
use crate::subset::UserSet;

#[derive(Clone, Debug, PartialEq)]
pub struct RobustConfig {
    pub files: usize,
    pub users: usize,
    pub t: usize,
    /// Number of inactive users tolerated.
    pub a: usize,
    /// Probability that a user is inactive.
    pub p: Rational,
}

impl RobustConfig {
    pub fn new(files: usize, users: usize, t: usize, a: usize, p: Rational) -> Result<Self> {
        if users < 2 || files < 1 {
            return Err(Error::InvalidScenario(format!(
                "need N >= 1 and K >= 2, got N={files}, K={users}"
            )));
        }
        if t < 1 || t > users {
            return Err(Error::InvalidScenario(format!("t = {t} outside [1, {users}]")));
        }
        if a >= users {
            return Err(Error::InvalidScenario(format!("a = {a} outside [0, {}]", users - 1)));
        }
        if p < Rational::zero() || p > int(1) {
            return Err(Error::InvalidScenario(format!("p = {p} outside [0, 1]")));
        }
        Ok(RobustConfig { files, users, t, a, p })
    }

    /// Message blocks per file.
    pub fn m(&self) -> BigUint {
        let (k, t, a) = (self.users as u64, self.t as u64, self.a as u64);
        BigUint::from(t) * choose(k - 1, t - 1) + BigUint::from(k - 1 - a) * choose(k - 2, t - 1)
    }

    /// Coded blocks per file.
    pub fn n(&self) -> BigUint {
        BigUint::from(self.t) * choose(self.users as u64, self.t as u64)
    }

    /// `n / m`.
    pub fn factor(&self) -> Rational {
        big(&self.n()) / big(&self.m())
    }

    /// `K / [t + (K-1-a)(K-t)/(K-1)]`.
    pub fn factor_closed_form(&self) -> Rational {
        let (k, t, a) = (self.users as i64, self.t as i64, self.a as i64);
        int(k) / (int(t) + rational((k - 1 - a) * (k - t), k - 1))
    }

    /// Cache size `M n/m` with `M = tN/K`.
    pub fn memory(&self) -> Rational {
        rational((self.t * self.files) as i64, self.users as i64) * self.factor()
    }

    pub fn outage(&self) -> Rational {
        outage_probability_exact(self.users, &self.p, self.a)
    }
}

/// What happened at one active user.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DecodeStatus {
    Decoded,
    /// Fewer than `m` coded blocks of the requested file were available.
    Insufficient {
        have: usize,
        need: usize,
    },
    /// Enough blocks but the output differs from the file; never expected.
    Mismatch,
}

#[derive(Clone, Debug)]
pub struct RobustOutcome {
    pub file_bits: u64,
    /// Broadcast bits over `F`.
    pub load: Rational,
    pub statuses: Vec<(usize, DecodeStatus)>,
    pub inactive: UserSet,
}

impl RobustOutcome {
    pub fn all_decoded(&self) -> bool {
        self.statuses.iter().all(|(_, s)| *s == DecodeStatus::Decoded)
    }
}

/// Smallest `F` the robust scheme accepts: `m` blocks of one field symbol.
pub fn min_robust_file_bits(config: &RobustConfig) -> Result<u64> {
    let (m, n) = code_params(config)?;
    let code = ErasureCode::new(m, n)?;
    Ok((m * code.symbol_bits()) as u64)
}

fn code_params(config: &RobustConfig) -> Result<(usize, usize)> {
    let m = config.m().to_usize();
    let n = config.n().to_usize();
    match (m, n) {
        (Some(m), Some(n)) if n <= 65535 => Ok((m, n)),
        _ => Err(Error::Erasure(format!(
            "code with n = {} blocks is too large to simulate",
            config.n()
        ))),
    }
}

/// Coded database: per file, `n` coded blocks in sub-piece order.
pub fn mds_encode_database(
    config: &RobustConfig,
    seed: u64,
    file_bits: u64,
) -> Result<(ErasureCode, Vec<BitBlock>, SubPieceStore)> {
    let (m, n) = code_params(config)?;
    let code = ErasureCode::new(m, n)?;
    let unit = (m * code.symbol_bits()) as u64;
    if file_bits == 0 || !file_bits.is_multiple_of(unit) {
        return Err(Error::Indivisible {
            bits: file_bits,
            divisor: unit,
        });
    }
    let block = (file_bits / m as u64) as usize;
    let originals: Vec<BitBlock> = (0..config.files)
        .map(|q| file_bits_from_seed(seed, q, file_bits))
        .collect();
    let per_file = originals
        .iter()
        .map(|w| {
            let parts: Vec<BitBlock> = (0..m).map(|j| w.slice(j * block, block)).collect();
            code.encode(&parts)
        })
        .collect::<Result<Vec<_>>>()?;
    let store = SubPieceStore::from_blocks(config.files, config.users, config.t, file_bits, per_file)?;
    Ok((code, originals, store))
}

/// Runs placement and delivery with only `active` users transmitting, then
/// decodes at every active user.
pub fn robust_place_and_deliver(
    config: &RobustConfig,
    demand: &DemandVector,
    active: UserSet,
    seed: u64,
    file_bits: Option<u64>,
) -> Result<RobustOutcome> {
    if demand.users() != config.users || demand.files() != config.files {
        return Err(Error::InvalidDemand(format!(
            "demand {demand} does not match N={}, K={}",
            config.files, config.users
        )));
    }
    let file_bits = match file_bits {
        Some(f) => f,
        None => min_robust_file_bits(config)?,
    };
    let (code, originals, store) = mds_encode_database(config, seed, file_bits)?;
    let cache = man_placement(&store);
    let options = DeliveryOptions {
        leaders: LeaderRule::Lowest,
        active,
    };
    let log = transmit_with(demand, &store, options);
    let mut statuses = Vec::new();
    for k in active.iter() {
        let view = cache.view(k, &store);
        let q = demand.file_of(k);
        let mut blocks: Vec<(usize, BitBlock)> = store
            .ids_of_file(q)
            .filter(|id| view.holds(id))
            .map(|id| Ok((store.index_in_file(&id), view.get(&id)?.clone())))
            .collect::<Result<_>>()?;
        for i in active.iter().filter(|&i| i != k) {
            for (id, bits, _) in recover_from_sender(&view, i, &log, demand)? {
                blocks.push((store.index_in_file(&id), bits));
            }
        }
        let status = if blocks.len() < code.m() {
            DecodeStatus::Insufficient {
                have: blocks.len(),
                need: code.m(),
            }
        } else {
            let parts = code.decode(&blocks)?;
            if BitBlock::concat(&parts) == originals[q] {
                DecodeStatus::Decoded
            } else {
                DecodeStatus::Mismatch
            }
        };
        statuses.push((k, status));
    }
    Ok(RobustOutcome {
        file_bits,
        load: log.load(),
        statuses,
        inactive: UserSet::full(config.users).difference(active),
    })
}

/// `P(more than a of K users inactive)`, exactly.
pub fn outage_probability_exact(users: usize, p: &Rational, a: usize) -> Rational {
    let q = int(1) - p;
    let mut total = Rational::zero();
    for i in a + 1..=users {
        let term = big(&choose(users as u64, i as u64))
            * num_traits::pow(p.clone(), i)
            * num_traits::pow(q.clone(), users - i);
        total += term;
    }
    total
}

/// [`outage_probability_exact`] for a binary `p`, taken at its exact value.
pub fn outage_probability(users: usize, p: f64, a: usize) -> f64 {
    let exact = Rational::from_float(p).expect("finite probability");
    to_f64(&outage_probability_exact(users, &exact, a))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonteCarlo {
    pub trials: u64,
    pub outages: u64,
    pub estimate: f64,
    /// Standard error of the estimate.
    pub std_error: f64,
}

impl MonteCarlo {
    /// `z` standard errors.
    pub fn half_width(&self, z: f64) -> f64 {
        z * self.std_error
    }
}

/// Fraction of trials with more than `a` inactive users. Trial `j` draws from
/// stream `j` of a ChaCha8 generator keyed by `seed`, so the result does not
/// depend on the thread count.
pub fn monte_carlo_outage(users: usize, p: f64, a: usize, trials: u64, seed: u64) -> Result<MonteCarlo> {
    if trials == 0 {
        return Err(Error::InvalidScenario("need at least one trial".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidScenario(format!("p = {p} outside [0, 1]")));
    }
    let outages: u64 = (0..trials)
        .into_par_iter()
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(j);
            let inactive = (0..users).filter(|_| rng.random::<f64>() < p).count();
            u64::from(inactive > a)
        })
        .sum();
    let estimate = outages as f64 / trials as f64;
    let std_error = (estimate * (1.0 - estimate) / trials as f64).sqrt();
    Ok(MonteCarlo {
        trials,
        outages,
        estimate,
        std_error,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct InactivityPoint {
    pub a: usize,
    pub t: usize,
    pub memory: Rational,
    pub load: Rational,
    pub p_out: f64,
}

pub const INACTIVITY_CSV_HEADER: &str = "a,t,M_float,R_float,P_out";

impl InactivityPoint {
    pub fn to_csv(&self) -> String {
        use crate::combinatorics::fmt_float;
        format!(
            "{},{},{},{},{}",
            self.a,
            self.t,
            fmt_float(to_f64(&self.memory)),
            fmt_float(to_f64(&self.load)),
            fmt_float(self.p_out)
        )
    }
}

/// Corner points `(M n/m, R n/m)` of `kind` for each `t` in `ts`.
pub fn tradeoff_curve_inactivity(
    files: usize,
    users: usize,
    p: &Rational,
    a: usize,
    kind: CurveKind,
    ts: impl IntoIterator<Item = usize>,
) -> Result<Vec<InactivityPoint>> {
    if kind.is_converse() {
        return Err(Error::InvalidScenario(format!("{kind} is a lower bound, not a scheme")));
    }
    let p_out = to_f64(&outage_probability_exact(users, p, a));
    let ts: Vec<usize> = ts.into_iter().collect();
    ts.into_par_iter()
        .map(|t| {
            let cfg = RobustConfig::new(files, users, t, a, p.clone())?;
            let f = cfg.factor();
            Ok(InactivityPoint {
                a,
                t,
                memory: cfg.memory(),
                load: kind.corner(files, users, t) * &f,
                p_out,
            })
        })
        .collect()
}
