//! Joint laws of (in-degree, out-degree, initial equity) and their finite-n
//! discretisations.
//!
//! A class `(i, j, c)` with `c > i` can never default; such classes are kept
//! as stored mass because their in-stubs still absorb links. Mass missing from
//! a distribution whose entries sum to less than one is treated as isolated
//! invulnerable nodes `(0, 0, 1)`.

mod apportion;
pub mod copula;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};

pub use apportion::empirical_counts;

/// `(in_degree, out_degree, initial_equity)`.
pub type Class = (u32, u32, u32);

/// Tolerance on `Σ i·p = Σ j·p`, relative to `max(1, λ)`.
pub const BALANCE_TOL: f64 = 1e-12;
const MASS_TOL: f64 = 1e-9;

/// Masses of one `(i, j)` degree pair, split by initial equity.
#[derive(Debug, Clone, PartialEq)]
pub struct DegreeBlock {
    pub i: u32,
    pub j: u32,
    /// `by_equity[c] = p(i, j, c)` for `c = 0..=i`.
    pub by_equity: Vec<f64>,
    /// Total mass with `c > i`.
    pub invulnerable: f64,
}

impl DegreeBlock {
    pub fn total(&self) -> f64 {
        self.by_equity.iter().sum::<f64>() + self.invulnerable
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    entries: BTreeMap<Class, f64>,
    lambda: f64,
    max_degree: u32,
    blocks: Vec<DegreeBlock>,
}

impl JointDistribution {
    /// Builds a distribution from `(class, mass)` pairs. Repeated classes are
    /// summed and zero masses dropped.
    pub fn from_entries(entries: impl IntoIterator<Item = (Class, f64)>) -> Result<Self> {
        let mut map: BTreeMap<Class, f64> = BTreeMap::new();
        for (class, mass) in entries {
            if !mass.is_finite() || mass < 0.0 {
                return Err(validation(format!("mass {mass} for class {class:?} is not a probability")));
            }
            if mass > 0.0 {
                *map.entry(class).or_insert(0.0) += mass;
            }
        }
        if map.is_empty() {
            return Err(validation("distribution has no positive mass"));
        }
        let total: f64 = map.values().sum();
        if total > 1.0 + MASS_TOL {
            return Err(validation(format!("masses sum to {total} > 1")));
        }
        let (sum_in, sum_out) = degree_sums(&map);
        if (sum_in - sum_out).abs() > BALANCE_TOL * sum_in.max(1.0) {
            return Err(validation(format!(
                "in/out degree imbalance: sum i*p = {sum_in}, sum j*p = {sum_out}"
            )));
        }
        let max_degree = map.keys().map(|&(i, j, _)| i.max(j)).max().unwrap_or(0);

        let mut blocks: Vec<DegreeBlock> = Vec::new();
        for (&(i, j, c), &mass) in &map {
            let needs_new = blocks.last().is_none_or(|b| (b.i, b.j) != (i, j));
            if needs_new {
                blocks.push(DegreeBlock { i, j, by_equity: vec![0.0; i as usize + 1], invulnerable: 0.0 });
            }
            let block = blocks.last_mut().expect("pushed above");
            if c <= i {
                block.by_equity[c as usize] += mass;
            } else {
                block.invulnerable += mass;
            }
        }

        Ok(Self { entries: map, lambda: sum_in, max_degree, blocks })
    }

    /// The empirical law `P_n = counts / n`.
    pub fn from_counts(counts: &EmpiricalCounts) -> Result<Self> {
        let n = counts.n as f64;
        Self::from_entries(counts.counts.iter().map(|(&k, &v)| (k, v as f64 / n)))
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn max_degree(&self) -> u32 {
        self.max_degree
    }

    pub fn entries(&self) -> &BTreeMap<Class, f64> {
        &self.entries
    }

    pub fn mass(&self, class: Class) -> f64 {
        self.entries.get(&class).copied().unwrap_or(0.0)
    }

    pub fn total_mass(&self) -> f64 {
        self.entries.values().sum()
    }

    /// Per-`(i, j)` view, sorted by `(i, j)`.
    pub fn blocks(&self) -> &[DegreeBlock] {
        &self.blocks
    }

    /// `Σ p(i, j, 0)`: the initially defaulted fraction.
    pub fn initial_default_mass(&self) -> f64 {
        self.blocks.iter().map(|b| b.by_equity[0]).sum()
    }

    /// Out-degrees `j > 0` carried by some vulnerable class.
    pub fn vulnerable_out_degrees(&self) -> Vec<u32> {
        let mut js: Vec<u32> = self
            .blocks
            .iter()
            .filter(|b| b.j > 0 && b.by_equity.iter().skip(1).any(|&m| m > 0.0))
            .map(|b| b.j)
            .collect();
        js.sort_unstable();
        js.dedup();
        js
    }

    /// Smallest `M` with both `Σ_{i∨j≥M} i·p < eps` and `Σ_{i∨j≥M} j·p < eps`.
    pub fn truncation_index(&self, eps: f64) -> Result<u32> {
        if !(eps > 0.0) {
            return Err(validation("eps must be positive"));
        }
        for m in 0..=self.max_degree + 1 {
            let (ti, tj) = self
                .entries
                .iter()
                .filter(|(&(i, j, _), _)| i.max(j) >= m)
                .fold((0.0, 0.0), |(a, b), (&(i, j, _), &p)| (a + i as f64 * p, b + j as f64 * p));
            if ti < eps && tj < eps {
                return Ok(m);
            }
        }
        unreachable!("tail above the max degree is empty")
    }

    /// Makes every class with `i ∨ j ≥ M^eps` invulnerable. Degrees, and hence
    /// λ, are unchanged; the extra defaults or interventions the tail could
    /// have caused are bounded by `eps` per unit of cost.
    pub fn truncated(&self, eps: f64) -> Result<Self> {
        let m = self.truncation_index(eps)?;
        Self::from_entries(self.entries.iter().map(|(&(i, j, c), &p)| {
            if i.max(j) >= m && c <= i {
                ((i, j, i + 1), p)
            } else {
                ((i, j, c), p)
            }
        }))
    }
}

fn degree_sums(map: &BTreeMap<Class, f64>) -> (f64, f64) {
    map.iter().fold((0.0, 0.0), |(a, b), (&(i, j, _), &p)| (a + i as f64 * p, b + j as f64 * p))
}

/// `λ = Σ i·p = Σ j·p`, recomputed from the entries.
pub fn mean_degree(p: &JointDistribution) -> Result<f64> {
    let (sum_in, sum_out) = degree_sums(&p.entries);
    if (sum_in - sum_out).abs() > BALANCE_TOL * sum_in.max(1.0) {
        return Err(validation(format!("imbalance: {sum_in} vs {sum_out}")));
    }
    Ok(sum_in)
}

/// Node counts per class for a network of `n` nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmpiricalCounts {
    pub n: u64,
    pub counts: BTreeMap<Class, u64>,
    pub m: u64,
}

impl EmpiricalCounts {
    /// Validates explicit counts: nonempty and stub-balanced.
    pub fn from_counts(counts: impl IntoIterator<Item = (Class, u64)>) -> Result<Self> {
        let mut map: BTreeMap<Class, u64> = BTreeMap::new();
        for (class, k) in counts {
            if k > 0 {
                *map.entry(class).or_insert(0) += k;
            }
        }
        let n: u64 = map.values().sum();
        if n == 0 {
            return Err(Error::Construction("empty population".into()));
        }
        let m_in: u64 = map.iter().map(|(&(i, _, _), &k)| i as u64 * k).sum();
        let m_out: u64 = map.iter().map(|(&(_, j, _), &k)| j as u64 * k).sum();
        if m_in != m_out {
            return Err(Error::Construction(format!(
                "stub imbalance: {m_in} in-stubs vs {m_out} out-stubs"
            )));
        }
        Ok(Self { n, counts: map, m: m_in })
    }

    pub fn get(&self, class: Class) -> u64 {
        self.counts.get(&class).copied().unwrap_or(0)
    }
}

/// Serialised distribution description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionSpec {
    ZipfCopula { xi: f64, a1: f64, a2: f64, rho: f64, max_deg: u32 },
    Explicit { entries: Vec<(u32, u32, u32, f64)> },
}

impl DistributionSpec {
    pub fn build(&self) -> Result<JointDistribution> {
        match *self {
            DistributionSpec::ZipfCopula { xi, a1, a2, rho, max_deg } => {
                build_zipf_copula(xi, a1, a2, rho, max_deg)
            }
            DistributionSpec::Explicit { ref entries } => {
                JointDistribution::from_entries(entries.iter().map(|&(i, j, c, p)| ((i, j, c), p)))
            }
        }
    }
}

/// `P(k) ∝ k^{-(1+a)}` on `1..=max`.
pub fn zipf_pmf(a: f64, max: u32) -> Vec<f64> {
    let w: Vec<f64> = (1..=max).map(|k| (k as f64).powf(-(1.0 + a))).collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|x| x / z).collect()
}

/// Equal in/out degrees on `1..=max_deg`. A fraction `xi` of nodes starts in
/// default, spread evenly over degrees; the rest get (degree, equity) from a
/// Gaussian copula with correlation `rho` over Zipf marginals with exponents
/// `a1` and `a2`.
pub fn build_zipf_copula(xi: f64, a1: f64, a2: f64, rho: f64, max_deg: u32) -> Result<JointDistribution> {
    if !(0.0..1.0).contains(&xi) {
        return Err(validation(format!("xi = {xi} outside [0, 1)")));
    }
    if !(a1 > 0.0) || !(a2 > 0.0) || !a1.is_finite() || !a2.is_finite() {
        return Err(validation("Zipf exponents must be positive and finite"));
    }
    if !(rho > -1.0 && rho < 1.0) {
        return Err(validation(format!("rho = {rho} outside (-1, 1)")));
    }
    if max_deg == 0 {
        return Err(validation("max_deg must be at least 1"));
    }
    let degree = zipf_pmf(a1, max_deg);
    let equity = zipf_pmf(a2, max_deg);
    let table = copula::copula_table(&degree, &equity, rho);
    let mut entries = Vec::with_capacity((max_deg as usize + 1) * max_deg as usize);
    for i in 1..=max_deg {
        entries.push(((i, i, 0), xi / max_deg as f64));
        for c in 1..=max_deg {
            entries.push(((i, i, c), (1.0 - xi) * table[i as usize - 1][c as usize - 1]));
        }
    }
    JointDistribution::from_entries(entries)
}
