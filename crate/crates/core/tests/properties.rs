mod common;

use std::collections::BTreeMap;

use common::{all_applicable, random_schedule, sequences};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use resched_core::ops::{self, Mode, OperatorInstance, OperatorKind, Vertical};
use resched_core::rules::{self, Candidate, FeatureVector, RuleKey};
use resched_core::{plant, PlantConfig, RuleTable, Scenario, Schedule, TaskId};

fn task_multiset(s: &Schedule) -> BTreeMap<TaskId, (u32, u64, u64)> {
    s.tasks.values().map(|t| (t.id, (t.product, t.quantity.to_bits(), t.due_date.to_bits()))).collect()
}

proptest! {
    #[test]
    fn recompute_timing_is_idempotent(seed in any::<u64>()) {
        let s = random_schedule(seed, 20, 5);
        let mut again = s.clone();
        again.recompute_timing().unwrap();
        prop_assert_eq!(&again, &s);
        prop_assert!(s.validate().is_empty());
    }

    #[test]
    fn wip_ignores_order(seed in any::<u64>(), shuffle in any::<u64>()) {
        let s = random_schedule(seed, 20, 5);
        let mut t = s.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(shuffle);
        for r in &mut t.resources {
            use rand::seq::SliceRandom;
            r.sequence.shuffle(&mut rng);
        }
        t.recompute_timing().unwrap();
        let (a, b) = (s.compute_metrics(0.0).total_wip, t.compute_metrics(0.0).total_wip);
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
    }

    #[test]
    fn applied_operators_keep_schedules_valid(seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let s = random_schedule(seed, 12, 4);
        let ops = all_applicable(&s);
        prop_assume!(!ops.is_empty());
        let op = ops[pick.index(ops.len())];
        let next = ops::apply(&s, &op).unwrap();
        prop_assert!(next.validate().is_empty());
        prop_assert_eq!(task_multiset(&next), task_multiset(&s));
    }

    #[test]
    fn inapplicable_operators_are_rejected(seed in any::<u64>(), k in 0usize..12, f in 1u32..13, a in 1u32..13) {
        let s = random_schedule(seed, 12, 4);
        let op = OperatorInstance { kind: OperatorKind::all()[k], focal: TaskId(f), auxiliary: TaskId(a) };
        match ops::applicable(&s, &op) {
            Ok(true) => prop_assert!(ops::apply(&s, &op).is_ok()),
            _ => prop_assert!(ops::apply(&s, &op).is_err()),
        }
    }

    #[test]
    fn swapping_back_restores(seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let s = random_schedule(seed, 12, 4);
        let swaps: Vec<_> = all_applicable(&s).into_iter().filter(|o| o.kind.mode == Mode::Swap).collect();
        prop_assume!(!swaps.is_empty());
        let op = swaps[pick.index(swaps.len())];
        let next = ops::apply(&s, &op).unwrap();
        for kind in OperatorKind::all().into_iter().filter(|k| k.mode == Mode::Swap) {
            let back = OperatorInstance { kind, ..op };
            if ops::applicable(&next, &back).unwrap() {
                prop_assert_eq!(sequences(&ops::apply(&next, &back).unwrap()), sequences(&s));
            }
        }
    }

    #[test]
    fn jumping_back_restores(seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let s = random_schedule(seed, 12, 4);
        let jumps: Vec<_> = all_applicable(&s).into_iter().filter(|o| o.kind.mode == Mode::Jump).collect();
        prop_assume!(!jumps.is_empty());
        let op = jumps[pick.index(jumps.len())];
        let focal = &s.tasks[&op.focal];
        let seq = &s.resource(focal.resource().unwrap()).unwrap().sequence;
        let k = focal.seq_index();
        let anchor = if k > 0 {
            Some((seq[k - 1], Vertical::Down))
        } else {
            seq.get(1).map(|&t| (t, Vertical::Up))
        };
        let Some((anchor, vertical)) = anchor else { return Ok(()) };
        let next = ops::apply(&s, &op).unwrap();
        for kind in OperatorKind::all().into_iter().filter(|k| k.mode == Mode::Jump && k.vertical == vertical) {
            let back = OperatorInstance { kind, focal: op.focal, auxiliary: anchor };
            if ops::applicable(&next, &back).unwrap() {
                prop_assert_eq!(sequences(&ops::apply(&next, &back).unwrap()), sequences(&s));
            }
        }
    }

    #[test]
    fn proposals_are_applicable(seed in any::<u64>(), kf in 1usize..6, ka in 1usize..4) {
        let s = random_schedule(seed, 20, 5);
        let proposed = ops::propose(&s, kf, ka);
        for op in &proposed {
            prop_assert!(ops::applicable(&s, op).unwrap());
        }
        let mut sorted = proposed.clone();
        sorted.sort_by_key(|o| (o.kind.to_string(), o.focal, o.auxiliary));
        prop_assert_eq!(sorted, proposed);
    }

    #[test]
    fn constant_shift_keeps_greedy_choice(seed in any::<u64>(), shift in -50.0f64..50.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kinds = OperatorKind::all();
        let mut table = RuleTable::new();
        let candidates: Vec<Candidate> = (0..rng.gen_range(1..10u32))
            .map(|k| {
                let features = FeatureVector([0; 5].map(|_| rng.gen_range(1..=5)));
                let kind = kinds[rng.gen_range(0..12)];
                Candidate { op: OperatorInstance { kind, focal: TaskId(k + 1), auxiliary: TaskId(k + 2) }, features }
            })
            .collect();
        for c in &candidates {
            for key in c.features.keys(c.op.kind) {
                table.set(key, (rng.gen_range(-8..8) as f64) * 0.25);
            }
        }
        let keys: Vec<RuleKey> = table.iter().map(|(k, _)| *k).collect();
        let mut shifted = table.clone();
        for key in keys {
            shifted.set(key, table.get(&key).unwrap() + shift);
        }
        let a = rules::select_greedy(&table, &candidates, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let b = rules::select_greedy(&shifted, &candidates, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let qa: Vec<f64> = candidates.iter().map(|c| table.peek_q(&c.features, c.op.kind)).collect();
        let best = qa.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(qa[a.index], best);
        prop_assert_eq!(qa[b.index], best);
    }

    #[test]
    fn fifo_and_injection(seed in any::<u64>(), n in 1u32..30) {
        let config = PlantConfig { n_orders: n, ..PlantConfig::desk() };
        let scenario = Scenario::generate(&config, seed).unwrap();
        prop_assert!(scenario.baseline.validate().is_empty());
        prop_assert_eq!(scenario.baseline.tasks.len(), n as usize);
        let order = plant::sample_new_order(&scenario.plant, &scenario.baseline, scenario.next_order_id(), &mut ChaCha8Rng::seed_from_u64(seed));
        let (post, metrics) = plant::inject_new_order(&scenario.baseline, &order).unwrap();
        prop_assert!(post.validate().is_empty());
        prop_assert_eq!(post.tasks.len(), n as usize + 1);
        prop_assert_eq!(metrics.init_tardiness, metrics.tot_tard);
        let mut placed = 0;
        for (before, after) in scenario.baseline.resources.iter().zip(&post.resources) {
            let kept: Vec<TaskId> = after.sequence.iter().copied().filter(|t| *t != order.id).collect();
            prop_assert_eq!(&kept, &before.sequence);
            if after.sequence.last() == Some(&order.id) {
                placed += 1;
            }
        }
        prop_assert_eq!(placed, 1);
    }
}
