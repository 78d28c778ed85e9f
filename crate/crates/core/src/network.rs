//! Finite node populations and configuration-model stub matching.

use rand::Rng;

use crate::distribution::{Class, EmpiricalCounts};
use crate::error::{Error, Result};

/// Largest stub count for which exhaustive matching enumeration is allowed.
pub const ENUMERATION_LIMIT: u64 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Node {
    pub in_degree: u32,
    pub out_degree: u32,
    pub equity: u32,
}

impl Node {
    pub fn class(&self) -> Class {
        (self.in_degree, self.out_degree, self.equity)
    }

    /// Can be driven to default by losses on its own in-links.
    pub fn is_vulnerable(&self) -> bool {
        self.equity >= 1 && self.equity <= self.in_degree
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodePopulation {
    nodes: Vec<Node>,
    m: u64,
}

impl NodePopulation {
    /// Expands counts into nodes, sorted by class.
    pub fn instantiate(counts: &EmpiricalCounts) -> Result<Self> {
        let nodes = counts
            .counts
            .iter()
            .flat_map(|(&(i, j, c), &k)| {
                std::iter::repeat_n(Node { in_degree: i, out_degree: j, equity: c }, k as usize)
            })
            .collect();
        Self::from_nodes(nodes)
    }

    pub fn from_nodes(nodes: Vec<Node>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Construction("empty population".into()));
        }
        let m_in: u64 = nodes.iter().map(|v| v.in_degree as u64).sum();
        let m_out: u64 = nodes.iter().map(|v| v.out_degree as u64).sum();
        if m_in != m_out {
            return Err(Error::Construction(format!("stub imbalance: {m_in} in vs {m_out} out")));
        }
        if m_in > u32::MAX as u64 {
            return Err(Error::Construction(format!("{m_in} stubs exceed the supported range")));
        }
        Ok(Self { nodes, m: m_in })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    /// Fraction of nodes in each class: the empirical law `P_n`.
    pub fn counts(&self) -> EmpiricalCounts {
        EmpiricalCounts::from_counts(self.nodes.iter().map(|v| (v.class(), 1))).expect("population is valid")
    }
}

/// Remaining in-stubs per node, bucketed by how many each node has left.
///
/// A node with `r` stubs left occupies `r` consecutive slots of a virtual
/// array, so a uniform slot index picks node `w` with probability
/// `remaining(w) / total`. Cost per draw is linear in the maximum in-degree.
#[derive(Debug, Clone)]
pub struct StubPool {
    buckets: Vec<Vec<u32>>,
    position: Vec<u32>,
    remaining: Vec<u32>,
    total: u64,
}

impl StubPool {
    pub fn new(pop: &NodePopulation) -> Self {
        let max = pop.nodes.iter().map(|v| v.in_degree).max().unwrap_or(0) as usize;
        let mut buckets = vec![Vec::new(); max + 1];
        let mut position = vec![0u32; pop.n()];
        let mut remaining = vec![0u32; pop.n()];
        for (idx, v) in pop.nodes.iter().enumerate() {
            let r = v.in_degree as usize;
            remaining[idx] = v.in_degree;
            if r > 0 {
                position[idx] = buckets[r].len() as u32;
                buckets[r].push(idx as u32);
            }
        }
        Self { buckets, position, remaining, total: pop.m }
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn remaining(&self, node: usize) -> u32 {
        self.remaining[node]
    }

    /// Draws a node with probability proportional to its remaining in-stubs
    /// and consumes one of them.
    pub fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<usize> {
        if self.total == 0 {
            return Err(Error::Logic("no in-stubs left to draw".into()));
        }
        let mut u = rng.random_range(0..self.total);
        for r in 1..self.buckets.len() {
            let weight = r as u64 * self.buckets[r].len() as u64;
            if u < weight {
                let node = self.buckets[r][(u / r as u64) as usize] as usize;
                self.take(node);
                return Ok(node);
            }
            u -= weight;
        }
        unreachable!("slot index below the stub total")
    }

    /// Consumes one in-stub of a specific node.
    pub fn take(&mut self, node: usize) {
        let r = self.remaining[node] as usize;
        assert!(r > 0, "node {node} has no in-stubs left");
        let pos = self.position[node] as usize;
        let bucket = &mut self.buckets[r];
        let last = *bucket.last().expect("node is in its bucket");
        bucket.swap_remove(pos);
        if last as usize != node {
            self.position[last as usize] = pos as u32;
        }
        if r > 1 {
            self.position[node] = self.buckets[r - 1].len() as u32;
            self.buckets[r - 1].push(node as u32);
        }
        self.remaining[node] -= 1;
        self.total -= 1;
    }
}

/// A complete pairing of out-stubs with in-stubs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    /// `(source, target)` per out-stub, out-stubs in node order.
    pub links: Vec<(usize, usize)>,
    /// In-stub index (in node order) paired with each out-stub.
    pub in_stub_order: Vec<usize>,
}

/// Node owning each stub when stubs are laid out in node order.
fn stub_owners(pop: &NodePopulation, degree: impl Fn(&Node) -> u32) -> Vec<usize> {
    pop.nodes
        .iter()
        .enumerate()
        .flat_map(|(idx, v)| std::iter::repeat_n(idx, degree(v) as usize))
        .collect()
}

/// All `m!` matchings, each exactly once, as permutations of the in-stubs
/// against a fixed out-stub order.
pub fn enumerate_matchings(pop: &NodePopulation) -> Result<Matchings> {
    if pop.m > ENUMERATION_LIMIT {
        return Err(Error::TooLarge { m: pop.m, limit: ENUMERATION_LIMIT });
    }
    Ok(Matchings {
        sources: stub_owners(pop, |v| v.out_degree),
        targets: stub_owners(pop, |v| v.in_degree),
        perm: Some((0..pop.m as usize).collect()),
    })
}

pub struct Matchings {
    sources: Vec<usize>,
    targets: Vec<usize>,
    perm: Option<Vec<usize>>,
}

impl Iterator for Matchings {
    type Item = Matching;

    fn next(&mut self) -> Option<Matching> {
        let perm = self.perm.as_mut()?;
        let out = Matching {
            links: self.sources.iter().zip(perm.iter()).map(|(&s, &t)| (s, self.targets[t])).collect(),
            in_stub_order: perm.clone(),
        };
        if !next_permutation(perm) {
            self.perm = None;
        }
        Some(out)
    }
}

/// Advances to the next lexicographic permutation; false after the last one.
fn next_permutation(a: &mut [usize]) -> bool {
    if a.len() < 2 {
        return false;
    }
    let Some(i) = (0..a.len() - 1).rev().find(|&i| a[i] < a[i + 1]) else {
        return false;
    };
    let j = (i + 1..a.len()).rev().find(|&j| a[j] > a[i]).expect("a[i+1] > a[i]");
    a.swap(i, j);
    a[i + 1..].reverse();
    true
}
