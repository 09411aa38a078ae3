//! Property-based invariants: serialization round trips, metric axioms
//! beyond the exhaustive range, restriction structure, and simulator
//! determinism.

use proptest::prelude::*;

use arrovian::cyclic::{cyclic_profile, in_cyclic_family, BlockPartition, SystemParams, Synchrony};
use arrovian::metrics::{kendall_tau, spearman_footrule};
use arrovian::prefs::{
    enumerate_strict, format_default, parse_default, AlternativeSet, Preference, Profile,
};
use arrovian::safety::safe_area;
use arrovian::sim::{run_sync, CrashSchedule, FloodDecide};

fn arb_weak_pref(max_m: usize) -> impl Strategy<Value = Preference> {
    (1..=max_m).prop_flat_map(|m| {
        proptest::collection::vec(0..m, m)
            .prop_map(|levels| Preference::from_levels(&levels).expect("levels are valid"))
    })
}

fn arb_strict_pref(m: usize) -> impl Strategy<Value = Preference> {
    Just((0..m).collect::<Vec<usize>>())
        .prop_shuffle()
        .prop_map(|order| Preference::strict_from_order(&order).expect("permutation"))
}

proptest! {
    #[test]
    fn parse_format_round_trip(p in arb_weak_pref(6)) {
        let text = format_default(&p);
        prop_assert_eq!(parse_default(&text).unwrap(), p);
    }

    #[test]
    fn named_format_round_trip(p in arb_weak_pref(4)) {
        let alts = AlternativeSet::with_names(
            (0..p.m()).map(|i| format!("cand_{i}")).collect::<Vec<_>>(),
        ).unwrap();
        let text = alts.format_pref(&p).unwrap();
        prop_assert_eq!(alts.parse_pref(&text).unwrap(), p);
    }

    #[test]
    fn metric_axioms_hold_on_larger_sets(
        m in 2..=7usize,
        seed in any::<u64>(),
    ) {
        // derive three orders from the seed deterministically
        let mut orders = Vec::new();
        let mut state = seed;
        for _ in 0..3 {
            let mut order: Vec<usize> = (0..m).collect();
            for i in (1..m).rev() {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                order.swap(i, (state >> 33) as usize % (i + 1));
            }
            orders.push(Preference::strict_from_order(&order).unwrap());
        }
        for dist in [kendall_tau, spearman_footrule] {
            let d01 = dist(&orders[0], &orders[1]).unwrap();
            let d10 = dist(&orders[1], &orders[0]).unwrap();
            let d02 = dist(&orders[0], &orders[2]).unwrap();
            let d12 = dist(&orders[1], &orders[2]).unwrap();
            prop_assert_eq!(d01, d10);
            prop_assert_eq!(dist(&orders[0], &orders[0]).unwrap(), 0);
            prop_assert!(d02 <= d01 + d12);
        }
        let kt = kendall_tau(&orders[0], &orders[1]).unwrap();
        let sf = spearman_footrule(&orders[0], &orders[1]).unwrap();
        prop_assert!(kt <= sf && sf <= 2 * kt || (kt == 0 && sf == 0));
    }

    #[test]
    fn restriction_preserves_relative_order(
        p in arb_weak_pref(6),
        mask in 1u32..64,
    ) {
        let keep: Vec<usize> = (0..p.m()).filter(|&a| mask & (1 << a) != 0).collect();
        prop_assume!(!keep.is_empty());
        let restricted = p.restrict(&keep).unwrap();
        for (i, &a) in keep.iter().enumerate() {
            for (j, &b) in keep.iter().enumerate() {
                prop_assert_eq!(
                    p.strictly_prefers(a, b),
                    restricted.strictly_prefers(i, j)
                );
            }
        }
        if p.is_strict() {
            prop_assert!(restricted.is_strict());
        }
    }

    #[test]
    fn cyclic_construction_is_recognized(
        perm in Just((0..4usize).collect::<Vec<_>>()).prop_shuffle(),
        cut in 1..4usize,
        slots in 2..=4usize,
    ) {
        // two blocks from a random permutation of four alternatives
        let blocks = vec![perm[..cut].to_vec(), perm[cut..].to_vec()];
        let bp = BlockPartition::from_blocks(blocks).unwrap();
        let t = slots.div_ceil(2); // ensures k = 2 >= ceil(slots/t)
        prop_assume!(t >= 1);
        let params = SystemParams::new(slots + t, t).unwrap();
        let profile = cyclic_profile(&bp, slots).unwrap();
        let found = in_cyclic_family(&profile, params, Synchrony::Async).unwrap();
        prop_assert!(found.is_some());
        prop_assert!(found.unwrap() <= 2);
    }

    #[test]
    fn flooding_is_deterministic_and_safe(
        entries in proptest::collection::vec(arb_strict_pref(3), 3),
        faulty in 0..3usize,
        round in 0..=2usize,
        mask in 0u32..8,
    ) {
        let profile = Profile::new(entries).unwrap();
        let params = SystemParams::new(3, 1).unwrap();
        let schedule = if round == 0 {
            CrashSchedule::silent([faulty])
        } else {
            CrashSchedule::none().with_crash(
                faulty,
                round,
                (0..3usize).filter(|&d| mask & (1 << d) != 0),
            )
        };
        let l3 = enumerate_strict(3).unwrap();
        let flood = FloodDecide::new(l3.clone());
        let first = run_sync(&flood, params, &profile, &schedule).unwrap();
        let second = run_sync(&flood, params, &profile, &schedule).unwrap();
        prop_assert_eq!(&first, &second);

        // failure-free decisions stay inside the full-view safe areas
        let free = run_sync(&flood, params, &profile, &CrashSchedule::none()).unwrap();
        prop_assert_eq!(free.correct.len(), 3);
        for slot in 0..3 {
            let area = safe_area(profile.entries(), slot, 1, &l3).unwrap();
            prop_assert!(area.contains(&free.decisions[&slot]));
        }
    }
}
