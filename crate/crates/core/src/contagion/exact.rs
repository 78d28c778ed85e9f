//! Exact expectations by brute force over matchings and revelation orders.
//!
//! For every one of the `m!` matchings, the cascade is unrolled over every
//! order in which hidden out-links can be revealed, each hidden link being
//! equally likely at every step. This route never samples an in-stub, so it
//! is independent of the sequential construction used by the simulator.

use std::collections::HashMap;

use super::InterventionPolicy;
use crate::error::Result;
use crate::network::{enumerate_matchings, NodePopulation};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Expectation {
    pub defaults: f64,
    pub interventions: f64,
    pub steps: f64,
}

pub fn exact_expectation(pop: &NodePopulation, policy: &InterventionPolicy) -> Result<Expectation> {
    let matchings = enumerate_matchings(pop)?;
    let owners: Vec<usize> = pop
        .nodes()
        .iter()
        .enumerate()
        .flat_map(|(v, node)| std::iter::repeat_n(v, node.out_degree as usize))
        .collect();
    let initial: Vec<u32> = pop.nodes().iter().map(|v| v.equity).collect();
    let mut total = [0.0; 3];
    let mut count = 0u64;
    for matching in matchings {
        let targets: Vec<usize> = matching.links.iter().map(|&(_, t)| t).collect();
        let walk = Walk { pop, policy, owners: &owners, targets: &targets, initial: &initial };
        let mut memo = HashMap::new();
        let e = walk.expect(0, initial.clone(), &mut memo);
        for (acc, x) in total.iter_mut().zip(e) {
            *acc += x;
        }
        count += 1;
    }
    let c = count as f64;
    Ok(Expectation { defaults: total[0] / c, interventions: total[1] / c, steps: total[2] / c })
}

struct Walk<'a> {
    pop: &'a NodePopulation,
    policy: &'a InterventionPolicy,
    owners: &'a [usize],
    targets: &'a [usize],
    initial: &'a [u32],
}

impl Walk<'_> {
    fn losses(&self, mask: u32) -> Vec<u32> {
        let mut l = vec![0u32; self.pop.n()];
        for (s, &t) in self.targets.iter().enumerate() {
            if mask >> s & 1 == 1 {
                l[t] += 1;
            }
        }
        l
    }

    /// Expected terminal `(D, IT, T)` from the state `(mask, equity)`.
    fn expect(&self, mask: u32, equity: Vec<u32>, memo: &mut HashMap<(u32, Vec<u32>), [f64; 3]>) -> [f64; 3] {
        if let Some(&hit) = memo.get(&(mask, equity.clone())) {
            return hit;
        }
        let l = self.losses(mask);
        let defaulted: Vec<bool> = equity.iter().zip(&l).map(|(&c, &l)| c <= l).collect();
        let hidden: Vec<usize> =
            (0..self.owners.len()).filter(|&s| mask >> s & 1 == 0 && defaulted[self.owners[s]]).collect();

        let result = if hidden.is_empty() {
            let d = defaulted.iter().filter(|&&d| d).count() as f64;
            let it: u32 = equity.iter().zip(self.initial).map(|(c, c0)| c - c0).sum();
            [d, it as f64, mask.count_ones() as f64]
        } else {
            let k = mask.count_ones() as u64;
            let weight = 1.0 / hidden.len() as f64;
            let mut acc = [0.0; 3];
            for s in hidden {
                let w = self.targets[s];
                let mut next = equity.clone();
                let node = self.pop.nodes()[w];
                if !defaulted[w]
                    && next[w] == l[w] + 1
                    && self.policy.intervene(k, self.pop.n(), node.in_degree, node.out_degree, next[w])
                {
                    next[w] += 1;
                }
                let e = self.expect(mask | 1 << s, next, memo);
                for (a, x) in acc.iter_mut().zip(e) {
                    *a += weight * x;
                }
            }
            acc
        };
        memo.insert((mask, equity), result);
        result
    }
}
