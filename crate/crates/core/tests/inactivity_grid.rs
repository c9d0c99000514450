mod common;

use cachesim::bounds::d2d_per_demand;
use cachesim::combinatorics::{int, rational, to_f64, Rational};
use cachesim::delivery::DemandVector;
use cachesim::inactivity::{
    monte_carlo_outage, outage_probability, outage_probability_exact, robust_place_and_deliver, DecodeStatus,
    RobustConfig,
};
use cachesim::subset::UserSet;
use num_traits::{One, Zero};

#[test]
fn factor_matches_closed_form() {
    for k in 2..=8 {
        for t in 1..k {
            for a in 0..k {
                let cfg = RobustConfig::new(3, k, t, a, rational(1, 10)).unwrap();
                assert_eq!(cfg.factor(), cfg.factor_closed_form(), "K={k} t={t} a={a}");
                // n/m = K / [t + (K-1-a)(K-t)/(K-1)]
                let denom = rational(t as i64, 1) + rational(((k - 1 - a) * (k - t)) as i64, (k - 1) as i64);
                assert_eq!(cfg.factor(), int(k as i64) / denom);
            }
            assert_eq!(RobustConfig::new(3, k, t, 0, rational(0, 1)).unwrap().factor(), int(1));
        }
    }
}

/// Sum over all `2^K` inactivity patterns.
fn outage_by_enumeration(k: usize, p: &Rational, a: usize) -> Rational {
    let q = Rational::one() - p;
    UserSet::full(k)
        .all_subsets()
        .filter(|s| s.len() > a)
        .map(|s| {
            let mut w = Rational::one();
            for u in 0..k {
                w *= if s.contains(u) { p.clone() } else { q.clone() };
            }
            w
        })
        .fold(Rational::zero(), |acc, x| acc + x)
}

#[test]
fn outage_matches_enumeration() {
    for k in 1..=10 {
        for p in [rational(1, 10), rational(1, 3), rational(1, 2), rational(9, 10)] {
            for a in 0..=k {
                assert_eq!(outage_probability_exact(k, &p, a), outage_by_enumeration(k, &p, a));
            }
        }
    }
    assert!((outage_probability(100, 0.1, 32) - 3.2e-10).abs() < 0.05e-10);
}

#[test]
fn robust_load_is_factor_times_base_load() {
    for (n, k, t) in common::small_grid() {
        for a in 0..k {
            let cfg = RobustConfig::new(n, k, t, a, rational(1, 10)).unwrap();
            for raw in common::all_demands(n, k).into_iter().step_by(7) {
                let d = DemandVector::new(raw, n).unwrap();
                let out = robust_place_and_deliver(&cfg, &d, UserSet::full(k), 4, None).unwrap();
                assert!(out.all_decoded());
                assert_eq!(
                    out.load,
                    cfg.factor() * d2d_per_demand(k, t, &d),
                    "N={n} K={k} t={t} a={a}"
                );
            }
        }
    }
}

#[test]
fn shortfall_counts_match_block_arithmetic() {
    // An active user holds t C(K-1,t-1) blocks and gets C(K-2,t-1) from each
    // other active user; it needs m of them.
    for (n, k, t) in common::small_grid() {
        for a in 0..k {
            let cfg = RobustConfig::new(n, k, t, a, rational(1, 10)).unwrap();
            let m: usize = cfg.m().to_string().parse().unwrap();
            let d = DemandVector::new((0..k).map(|x| x % n).collect(), n).unwrap();
            for inactive in UserSet::full(k).all_subsets().filter(|s| s.len() < k) {
                let active = UserSet::full(k).difference(inactive);
                let out = robust_place_and_deliver(&cfg, &d, active, 9, None).unwrap();
                let have = t as u128 * common::choose(k - 1, t - 1)
                    + (active.len() - 1) as u128 * common::choose(k - 2, t - 1);
                for (u, status) in &out.statuses {
                    assert!(active.contains(*u));
                    match status {
                        DecodeStatus::Decoded => assert!(have >= m as u128),
                        DecodeStatus::Insufficient { have: h, need } => {
                            assert_eq!((*h as u128, *need), (have, m));
                        }
                        DecodeStatus::Mismatch => panic!("mismatch at N={n} K={k} t={t} a={a}"),
                    }
                }
                assert_eq!(out.statuses.len(), active.len());
                assert_eq!(out.inactive, inactive);
            }
        }
    }
}

#[test]
fn monte_carlo_is_reproducible_and_thread_independent() {
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = one.install(|| monte_carlo_outage(20, 0.3, 9, 20_000, 5).unwrap());
    let b = four.install(|| monte_carlo_outage(20, 0.3, 9, 20_000, 5).unwrap());
    assert_eq!(a.outages, b.outages);
    let exact = to_f64(&outage_probability_exact(20, &rational(3, 10), 9));
    let sigma = (exact * (1.0 - exact) / 20_000.0).sqrt();
    assert!((a.estimate - exact).abs() <= 4.0 * sigma);
}

#[test]
fn decodes_iff_at_most_a_inactive() {
    for (n, k, t) in common::small_grid().into_iter().chain((2..=5).map(|k| (2, k, k))) {
        for a in 0..k {
            let cfg = RobustConfig::new(n, k, t, a, rational(1, 10)).unwrap();
            let d = DemandVector::new((0..k).map(|x| (x + 1) % n).collect(), n).unwrap();
            for inactive in UserSet::full(k).all_subsets().filter(|s| s.len() < k) {
                let active = UserSet::full(k).difference(inactive);
                let out = robust_place_and_deliver(&cfg, &d, active, 2, None).unwrap();
                // t = K: every user caches its whole file
                let expect = t == k || inactive.len() <= a;
                assert_eq!(out.all_decoded(), expect, "N={n} K={k} t={t} a={a} off={inactive:?}");
            }
        }
    }
}
