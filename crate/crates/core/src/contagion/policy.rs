//! Intervention rules.
//!
//! A policy is consulted only when the selected node is one revealed loss
//! away from default. It sees the step index and the node's degrees and
//! current buffer `c` (initial equity plus interventions so far), so a node
//! in state `(i, j, c, c - 1)` is looked up under class `(i, j, c)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::distribution::Class;

/// Start fractions of a threshold policy.
///
/// Class `(i, j, c)` is helped at step `k` iff `x < horizon` and
/// `k >= n·lambda·x`. A start fraction equal to the horizon therefore means
/// "never". The singular entry for `(i, j)` replaces the class `(i, j, i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdTable {
    pub lambda: f64,
    pub horizon: f64,
    #[serde(with = "class_map")]
    pub start: BTreeMap<Class, f64>,
    #[serde(with = "pair_map")]
    pub singular: BTreeMap<(u32, u32), f64>,
}

impl ThresholdTable {
    /// Start fraction governing state `(i, j, c, c - 1)`, if any.
    pub fn start_fraction(&self, i: u32, j: u32, c: u32) -> Option<f64> {
        if c == i {
            if let Some(&z) = self.singular.get(&(i, j)) {
                return Some(z);
            }
        }
        self.start.get(&(i, j, c)).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InterventionPolicy {
    None,
    Complete,
    /// Every distance-one hit on a node with in-degree in `lo..=hi`.
    DegreeRange { lo: u32, hi: u32 },
    ThresholdTable(ThresholdTable),
}

impl InterventionPolicy {
    /// Whether to inject one unit into a node in state `(i, j, c, c - 1)`
    /// that is hit at step `k` of a network with `n` nodes.
    pub fn intervene(&self, k: u64, n: usize, i: u32, j: u32, c: u32) -> bool {
        match self {
            InterventionPolicy::None => false,
            InterventionPolicy::Complete => true,
            InterventionPolicy::DegreeRange { lo, hi } => (*lo..=*hi).contains(&i),
            InterventionPolicy::ThresholdTable(t) => match t.start_fraction(i, j, c) {
                Some(x) if x < t.horizon => k as f64 >= n as f64 * t.lambda * x,
                _ => false,
            },
        }
    }
}

mod class_map {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(map: &BTreeMap<Class, f64>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(map.iter().map(|(&(i, j, c), &x)| (i, j, c, x)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<Class, f64>, D::Error> {
        let rows: Vec<(u32, u32, u32, f64)> = Vec::deserialize(d)?;
        Ok(rows.into_iter().map(|(i, j, c, x)| ((i, j, c), x)).collect())
    }
}

mod pair_map {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(map: &BTreeMap<(u32, u32), f64>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(map.iter().map(|(&(i, j), &z)| (i, j, z)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<(u32, u32), f64>, D::Error> {
        let rows: Vec<(u32, u32, f64)> = Vec::deserialize(d)?;
        Ok(rows.into_iter().map(|(i, j, z)| ((i, j), z)).collect())
    }
}
