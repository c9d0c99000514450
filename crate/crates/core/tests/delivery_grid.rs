mod common;

use cachesim::bounds::d2d_per_demand;
use cachesim::combinatorics::{int, rational};
use cachesim::delivery::{
    deliver, lemma1_null_check, select_leaders, transmit_all, DeliveryOptions, DemandVector, LeaderRule,
    TransmissionLog,
};
use cachesim::placement::{generate_database, man_placement, Scenario};
use cachesim::subset::UserSet;
use rayon::prelude::*;

fn stores() -> Vec<(usize, usize, usize, cachesim::placement::SubPieceStore)> {
    common::small_grid()
        .into_iter()
        .map(|(n, k, t)| {
            let s = Scenario::from_t(n, k, t, Scenario::min_file_bits(k, t, 12)).unwrap();
            (n, k, t, generate_database(&s, 11).unwrap())
        })
        .collect()
}

#[test]
fn leader_choice_does_not_change_load_or_decoding() {
    stores().par_iter().for_each(|(n, k, t, store)| {
        let cache = man_placement(store);
        for raw in common::all_demands(*n, *k) {
            let d = DemandVector::new(raw, *n).unwrap();
            let lo = deliver(&d, store, &cache, DeliveryOptions::all_active(*k));
            let hi = deliver(
                &d,
                store,
                &cache,
                DeliveryOptions {
                    leaders: LeaderRule::Highest,
                    active: UserSet::full(*k),
                },
            );
            assert_eq!(lo.log.load(), hi.log.load(), "N={n} K={k} t={t} d={d}");
            assert!(hi.all_decoded(store, &d) && hi.one_shot(), "N={n} K={k} t={t} d={d}");
            assert!(hi.log.audit_structure(&d) && lo.log.audit_structure(&d));
        }
    });
}

#[test]
fn codeword_counts_match_subset_count() {
    for (n, k, t, store) in stores() {
        for raw in common::all_demands(n, k) {
            let d = DemandVector::new(raw.clone(), n).unwrap();
            let log = transmit_all(&d, &store);
            for i in 0..k {
                let others: std::collections::BTreeSet<usize> = (0..k).filter(|&x| x != i).map(|x| raw[x]).collect();
                let expect = common::choose(k - 1, t) - common::choose(k - 1 - others.len(), t);
                assert_eq!(log.codeword_count(i) as u128, expect, "N={n} K={k} t={t} d={d} i={i}");
            }
        }
    }
}

#[test]
fn wire_format_round_trip() {
    for (n, k, t, store) in stores() {
        let d = DemandVector::new((0..k).map(|x| x % n).collect(), n).unwrap();
        let log = transmit_all(&d, &store);
        let bytes = log.to_bytes();
        let header = 4 + k.div_ceil(8);
        let per = header + store.subpiece_bits().div_ceil(8);
        let total: usize = (0..k).map(|i| log.codeword_count(i)).sum();
        assert_eq!(bytes.len(), total * per, "N={n} K={k} t={t}");
        let parsed = TransmissionLog::parse_bytes(&bytes, k, store.subpiece_bits()).unwrap();
        let original: Vec<_> = log.senders().iter().flat_map(|s| s.codewords.iter().cloned()).collect();
        assert_eq!(parsed, original);
        if !bytes.is_empty() {
            assert!(TransmissionLog::parse_bytes(&bytes[..bytes.len() - 1], k, store.subpiece_bits()).is_err());
        }
    }
}

#[test]
fn full_memory_needs_no_transmission() {
    for n in 1..=3 {
        for k in 2..=4 {
            let s = Scenario::new(n, k, int(n as i64), Scenario::min_file_bits(k, k, 8)).unwrap();
            let store = generate_database(&s, 5).unwrap();
            let cache = man_placement(&store);
            for raw in common::all_demands(n, k) {
                let d = DemandVector::new(raw, n).unwrap();
                let r = deliver(&d, &store, &cache, DeliveryOptions::all_active(k));
                assert_eq!(r.log.load(), int(0));
                assert!(r.all_decoded(&store, &d));
            }
        }
    }
}

#[test]
fn all_same_file_load() {
    // Everyone wants one file: a single leader per sender, (K - t)/(K - 1).
    for k in 2..=6 {
        for t in 1..k {
            let d = DemandVector::new(vec![0; k], 1).unwrap();
            let expect = rational(
                (k as u128 * (common::choose(k - 1, t) - common::choose(k - 2, t))) as i64,
                (t as u128 * common::choose(k, t)) as i64,
            );
            assert_eq!(d2d_per_demand(k, t, &d), expect);
            assert_eq!(expect, rational((k - t) as i64, (k - 1) as i64));
        }
    }
}

#[test]
fn lemma_rejects_pools_without_leaders() {
    let s = Scenario::new(2, 4, int(1), 12).unwrap();
    let store = generate_database(&s, 1).unwrap();
    let d = DemandVector::from_one_based(&[1, 2, 1, 1], 2).unwrap();
    let leaders = select_leaders(0, &d, LeaderRule::Lowest);
    let missing = leaders.without(leaders.iter().next().unwrap());
    assert!(lemma1_null_check(0, &d, missing, &store, LeaderRule::Lowest).is_err());
    assert!(lemma1_null_check(0, &d, UserSet::full(4), &store, LeaderRule::Lowest).is_err());
    assert!(lemma1_null_check(0, &d, UserSet::full(4).without(0), &store, LeaderRule::Lowest).unwrap());
}

#[test]
fn lemma_holds_for_highest_leaders_too() {
    for (n, k, _, store) in stores() {
        for raw in common::all_demands(n, k) {
            let d = DemandVector::new(raw, n).unwrap();
            for i in 0..k {
                let leaders = select_leaders(i, &d, LeaderRule::Highest);
                let rest = UserSet::full(k).without(i).difference(leaders);
                for extra in rest.all_subsets() {
                    let pool = leaders.union(extra);
                    assert!(lemma1_null_check(i, &d, pool, &store, LeaderRule::Highest).unwrap());
                }
            }
        }
    }
}
