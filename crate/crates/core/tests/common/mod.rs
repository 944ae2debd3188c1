#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use resched_core::ops::{self, OperatorInstance, OperatorKind};
use resched_core::{Resource, ResourceId, Schedule, Task, TaskId};

/// A random well-formed schedule with up to `max_tasks` tasks on up to
/// `max_resources` resources. Every product has at least one capable
/// resource; product 1 runs everywhere.
pub fn random_schedule(seed: u64, max_tasks: usize, max_resources: usize) -> Schedule {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_res = rng.gen_range(1..=max_resources);
    let n_tasks = rng.gen_range(1..=max_tasks);
    let n_products = rng.gen_range(1..=3u32);
    let mut resources: Vec<Resource> = (0..n_res)
        .map(|k| {
            let mut caps = vec![1];
            caps.extend((2..=n_products).filter(|_| rng.gen_bool(0.5)));
            let rate = rng.gen_range(1.0..20.0);
            Resource::new(ResourceId(k as u32 + 1), format!("r{}", k + 1), rate, caps)
        })
        .collect();
    let mut tasks = Vec::new();
    for k in 0..n_tasks {
        let id = TaskId(k as u32 + 1);
        let product = rng.gen_range(1..=n_products);
        let capable: Vec<usize> = (0..n_res).filter(|&r| resources[r].can_process(product)).collect();
        let product = if capable.is_empty() { 1 } else { product };
        let capable: Vec<usize> = (0..n_res).filter(|&r| resources[r].can_process(product)).collect();
        let r = *capable.choose(&mut rng).unwrap();
        resources[r].sequence.push(id);
        let quantity = rng.gen_range(1.0..60.0);
        let due = rng.gen_range(0.0..25.0);
        tasks.push(Task::new(id, format!("t{}", k + 1), product, quantity, due));
    }
    for r in &mut resources {
        r.sequence.shuffle(&mut rng);
    }
    Schedule::new(resources, tasks).unwrap()
}

/// Every applicable operator instance on `s`.
pub fn all_applicable(s: &Schedule) -> Vec<OperatorInstance> {
    let mut out = Vec::new();
    for kind in OperatorKind::all() {
        for &focal in s.tasks.keys() {
            for &auxiliary in s.tasks.keys() {
                let op = OperatorInstance { kind, focal, auxiliary };
                if ops::applicable(s, &op).unwrap() {
                    out.push(op);
                }
            }
        }
    }
    out
}

pub fn sequences(s: &Schedule) -> Vec<Vec<TaskId>> {
    s.resources.iter().map(|r| r.sequence.clone()).collect()
}
