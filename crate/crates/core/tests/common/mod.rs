#![allow(dead_code)]

use std::collections::BTreeMap;

use bailout_core::asymptotics::ThresholdSchedule;
use bailout_core::contagion::{InterventionPolicy, ThresholdTable};
use bailout_core::distribution::{Class, JointDistribution};
use bailout_core::network::{Node, NodePopulation};
use rand::Rng;

pub fn quadratic() -> JointDistribution {
    JointDistribution::from_entries([((2, 2, 0), 0.2), ((2, 2, 2), 0.8)]).unwrap()
}

/// A balanced random law on degrees up to `max_deg`. Classes come in
/// mirrored pairs `(i, j, ·)`, `(j, i, ·)` of equal mass, so in- and
/// out-degree sums agree exactly.
pub fn random_distribution<R: Rng>(rng: &mut R, max_deg: u32) -> JointDistribution {
    let pairs = rng.random_range(1..=4);
    let mut entries: Vec<(Class, f64)> = vec![((1, 1, 0), rng.random_range(0.05..0.3))];
    for _ in 0..pairs {
        let i = rng.random_range(1..=max_deg);
        let j = rng.random_range(1..=max_deg);
        let w = rng.random_range(0.1..1.0);
        entries.push(((i, j, rng.random_range(1..=i + 1)), w));
        entries.push(((j, i, rng.random_range(1..=j + 1)), w));
    }
    let total: f64 = entries.iter().map(|e| e.1).sum();
    JointDistribution::from_entries(entries.into_iter().map(|(k, w)| (k, w / total))).unwrap()
}

/// Random start fractions in `[0, y]` for most vulnerable classes, and a
/// singular start for some `(i, j)`.
pub fn random_schedule<R: Rng>(rng: &mut R, p: &JointDistribution) -> ThresholdSchedule {
    let y = rng.random_range(0.3..1.0);
    let mut start = BTreeMap::new();
    let mut singular = BTreeMap::new();
    for b in p.blocks() {
        for c in 1..=b.i {
            if rng.random_bool(0.7) {
                start.insert((b.i, b.j, c), rng.random_range(0.0..y));
            }
        }
        if b.i >= 1 && rng.random_bool(0.3) {
            singular.insert((b.i, b.j), rng.random_range(0.0..y));
        }
    }
    ThresholdSchedule { y, z: 0.0, v: 0.0, cost: 1.0, start, singular }
}

pub fn population(classes: &[Class]) -> NodePopulation {
    NodePopulation::from_nodes(
        classes.iter().map(|&(i, j, c)| Node { in_degree: i, out_degree: j, equity: c }).collect(),
    )
    .unwrap()
}

/// Small networks with at most six links.
pub fn small_fixtures() -> Vec<(&'static str, NodePopulation)> {
    vec![
        ("one_regular_3", population(&[(1, 1, 0), (1, 1, 1), (1, 1, 1)])),
        ("two_regular_3", population(&[(2, 2, 0), (2, 2, 1), (2, 2, 2)])),
        ("mixed_6", population(&[(1, 2, 0), (2, 1, 1), (2, 2, 2), (1, 1, 1)])),
        ("chain_4", population(&[(0, 1, 0), (1, 0, 1), (2, 2, 1), (1, 1, 0)])),
        ("buffered_5", population(&[(2, 2, 0), (1, 1, 1), (1, 1, 2), (1, 1, 1)])),
    ]
}

/// Policies exercised on the small fixtures. The threshold table switches
/// on partway through the cascade.
pub fn small_policies(pop: &NodePopulation) -> Vec<(&'static str, InterventionPolicy)> {
    let lambda = pop.m() as f64 / pop.n() as f64;
    let mut start = BTreeMap::new();
    for v in pop.nodes() {
        for c in 1..=v.in_degree {
            start.insert((v.in_degree, v.out_degree, c), 0.3);
        }
    }
    vec![
        ("none", InterventionPolicy::None),
        ("complete", InterventionPolicy::Complete),
        ("degree_2", InterventionPolicy::DegreeRange { lo: 2, hi: 2 }),
        (
            "threshold",
            InterventionPolicy::ThresholdTable(ThresholdTable { lambda, horizon: 1.0, start, singular: BTreeMap::new() }),
        ),
    ]
}
