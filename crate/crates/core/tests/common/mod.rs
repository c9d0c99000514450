//! Brute-force oracles shared by the integration tests. Deliberately written
//! from the load definitions with ordinary binomials and `u128` arithmetic,
//! without going through the library's combinatorics.
#![allow(dead_code)]

use cachesim::combinatorics::{rational, Rational};

pub fn choose(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u128, |acc, j| acc * (n - j) as u128 / (j + 1) as u128)
}

fn distinct(files: impl Iterator<Item = usize>) -> usize {
    let mut seen = std::collections::BTreeSet::new();
    for f in files {
        seen.insert(f);
    }
    seen.len()
}

fn ratio(num: u128, den: u128) -> Rational {
    rational(num as i64, den as i64)
}

/// One-shot D2D load for a 0-based demand: each sender `i` sends one
/// codeword per `t`-subset of the others that meets a leader.
pub fn d2d_load(users: usize, t: usize, demand: &[usize]) -> Rational {
    let codewords: u128 = (0..users)
        .map(|i| {
            let n_i = distinct((0..users).filter(|&k| k != i).map(|k| demand[k]));
            choose(users - 1, t) - choose(users - 1 - n_i, t)
        })
        .sum();
    ratio(codewords, t as u128 * choose(users, t))
}

/// Shared-link load with `N_e(d)` distinct requests.
pub fn shared_link_load(users: usize, t: usize, demand: &[usize]) -> Rational {
    let n_e = distinct(demand.iter().copied());
    ratio(choose(users, t + 1) - choose(users - n_e, t + 1), choose(users, t))
}

/// Every demand vector of `users` requests over `files` files.
pub fn all_demands(files: usize, users: usize) -> Vec<Vec<usize>> {
    let total = files.pow(users as u32);
    (0..total)
        .map(|mut x| {
            (0..users)
                .map(|_| {
                    let f = x % files;
                    x /= files;
                    f
                })
                .collect()
        })
        .collect()
}

pub fn average(values: impl Iterator<Item = Rational>) -> Rational {
    let mut n = 0i64;
    let mut sum = rational(0, 1);
    for v in values {
        sum += v;
        n += 1;
    }
    sum / rational(n, 1)
}

/// `(N, K, t)` with `N <= 3`, `2 <= K <= 5` and `1 <= t < K`.
pub fn small_grid() -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for n in 1..=3 {
        for k in 2..=5 {
            for t in 1..k {
                out.push((n, k, t));
            }
        }
    }
    out
}
