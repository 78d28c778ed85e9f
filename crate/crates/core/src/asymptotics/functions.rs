//! Limiting default and intervention functions.
//!
//! `I(y)` is the scaled out-degree of the default set once a fraction `y`
//! of all in-stubs has been revealed, and `J(y)` the default fraction. Their
//! tilde versions apply the threshold interventions `x(y, v)`; `it` is the
//! intervention fraction and `H̃` the terminal-condition function.

use serde::{Deserialize, Serialize};

use crate::binomial::{binom_pmf, binom_tail, trinomial_pmf};
use crate::distribution::{DegreeBlock, JointDistribution};

/// Tolerance for recognising `v·j - 1 = -K` when `v` is not exact.
pub const SINGULAR_TOL: f64 = 1e-12;

/// Terminal multiplier `v`, optionally tagged as exactly `(1 - K) / j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Multiplier {
    pub value: f64,
    pub singular_j: Option<u32>,
}

impl Multiplier {
    pub fn free(value: f64) -> Self {
        Self { value, singular_j: None }
    }

    /// `v = (1 - K) / j`, making out-degree `j` singular.
    pub fn singular(j: u32, cost: f64) -> Self {
        Self { value: (1.0 - cost) / j as f64, singular_j: Some(j) }
    }

    pub fn is_singular(&self, j: u32, cost: f64) -> bool {
        match self.singular_j {
            Some(sj) => sj == j,
            None => (self.value * j as f64 - 1.0 + cost).abs() <= SINGULAR_TOL,
        }
    }

    /// `K + v·j - 1`, exactly zero on singular classes.
    pub fn gap(&self, j: u32, cost: f64) -> f64 {
        if self.is_singular(j, cost) {
            0.0
        } else {
            cost + self.value * j as f64 - 1.0
        }
    }
}

impl From<f64> for Multiplier {
    fn from(value: f64) -> Self {
        Self::free(value)
    }
}

/// Start fraction for state `(i, j, c, c - 1)` given `a = K + v·j - 1`.
fn threshold_from_gap(i: u32, c: u32, cost: f64, a: f64, y: f64) -> f64 {
    if c == 0 || a >= 0.0 {
        return y;
    }
    // Strict inequality; y = 0 leaves the condition vacuous.
    if y > 0.0 && (c as f64) < i as f64 + a / (cost * y) {
        let k = (i - c) as f64 * cost;
        // (i - c + 1)K + vj - 1 = (i - c)K + a
        let x = 1.0 - (1.0 - y) * k / (k + a);
        x.clamp(0.0, y)
    } else {
        0.0
    }
}

/// Scaled time at which interventions on `(i, j, c, c - 1)` start.
pub fn x_threshold(i: u32, j: u32, c: u32, cost: f64, v: f64, y: f64) -> f64 {
    threshold_from_gap(i, c, cost, cost + v * j as f64 - 1.0, y)
}

/// [`x_threshold`] with singular-class bookkeeping.
pub fn x_threshold_exact(i: u32, j: u32, c: u32, cost: f64, v: Multiplier, y: f64) -> f64 {
    threshold_from_gap(i, c, cost, v.gap(j, cost), y)
}

/// `I(y)`.
pub fn i_of(p: &JointDistribution, y: f64) -> f64 {
    p.blocks().iter().map(|b| b.j as f64 * block_default_mass(b, y)).sum::<f64>() / p.lambda()
}

/// `J(y)`.
pub fn j_of(p: &JointDistribution, y: f64) -> f64 {
    p.blocks().iter().map(|b| block_default_mass(b, y)).sum()
}

fn block_default_mass(b: &DegreeBlock, y: f64) -> f64 {
    b.by_equity.iter().enumerate().map(|(c, &m)| m * binom_tail(b.i, c as i64, y)).sum()
}

/// `I'(y)`.
pub fn i_prime(p: &JointDistribution, y: f64) -> f64 {
    let mut acc = 0.0;
    for b in p.blocks() {
        for (c, &m) in b.by_equity.iter().enumerate().skip(1) {
            acc += b.j as f64 * m * b.i as f64 * binom_pmf(b.i - 1, c as u32 - 1, y);
        }
    }
    acc / p.lambda()
}

/// All program terms at one point `(y, v, z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProgramTerms {
    pub i_tilde: f64,
    pub j_tilde: f64,
    pub it: f64,
    pub h_tilde: f64,
}

/// Evaluates `Ĩ`, `J̃`, `it` and `H̃` in one pass over the classes.
///
/// On singular out-degrees the state `(i, j, i, i - 1)` is helped from `z`
/// to `y`, which removes `y^i - z^i` from the default mass of class
/// `(i, j, i)` and adds the same amount to the intervention count.
pub fn program_terms(p: &JointDistribution, cost: f64, y: f64, v: Multiplier, z: f64) -> ProgramTerms {
    terms(p, cost, y, v, z, true)
}

/// `(Ĩ, H̃)` only, skipping the intervention sums.
pub fn constraint_terms(p: &JointDistribution, cost: f64, y: f64, v: Multiplier, z: f64) -> (f64, f64) {
    let t = terms(p, cost, y, v, z, false);
    (t.i_tilde, t.h_tilde)
}

fn terms(p: &JointDistribution, cost: f64, y: f64, v: Multiplier, z: f64, with_it: bool) -> ProgramTerms {
    let mut i_tilde = 0.0;
    let mut j_tilde = 0.0;
    let mut it = 0.0;
    let mut h_tilde = 0.0;
    for b in p.blocks() {
        let (i, j) = (b.i, b.j);
        let a = v.gap(j, cost);
        let singular = v.is_singular(j, cost);
        let weight = (v.value * j as f64 - 1.0).max(-cost);
        let mut defaults = 0.0;
        for (c, &m) in b.by_equity.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            let c = c as u32;
            let x = threshold_from_gap(i, c, cost, a, y);
            defaults += m * binom_tail(i, c as i64, x);
            if c >= 1 {
                if with_it {
                    it += m * expected_interventions(i, c, x, y);
                }
                h_tilde += weight
                    * i as f64
                    * m
                    * (binom_tail(i - 1, c as i64 - 1, y) - binom_tail(i - 1, c as i64, x));
            }
        }
        if singular && i >= 1 {
            let correction = b.by_equity[i as usize] * (y.powi(i as i32) - z.powi(i as i32));
            defaults -= correction;
            it += correction;
        }
        i_tilde += j as f64 * defaults;
        j_tilde += defaults;
    }
    ProgramTerms { i_tilde: i_tilde / p.lambda(), j_tilde, it, h_tilde }
}

/// Expected interventions on a node of equity `c`, helped from `x` to `y`:
/// `Σ_{m=c}^{i} Σ_{n<c} (m - c + 1) P(Multin(i; x, y - x, 1 - y) = (n, m - n, i - m))`.
fn expected_interventions(i: u32, c: u32, x: f64, y: f64) -> f64 {
    let mid = (y - x).max(0.0);
    if mid == 0.0 {
        return 0.0;
    }
    let mut acc = 0.0;
    for m in c..=i {
        for n in 0..c {
            acc += (m - c + 1) as f64 * trinomial_pmf(i, n, m - n, x, mid);
        }
    }
    acc
}

pub fn i_tilde(p: &JointDistribution, cost: f64, y: f64, v: Multiplier, z: f64) -> f64 {
    program_terms(p, cost, y, v, z).i_tilde
}

pub fn j_tilde(p: &JointDistribution, cost: f64, y: f64, v: Multiplier, z: f64) -> f64 {
    program_terms(p, cost, y, v, z).j_tilde
}

pub fn it_of(p: &JointDistribution, cost: f64, y: f64, v: Multiplier, z: f64) -> f64 {
    program_terms(p, cost, y, v, z).it
}

/// `H̃(y, v)`; independent of `z`.
pub fn h_tilde(p: &JointDistribution, cost: f64, y: f64, v: Multiplier) -> f64 {
    program_terms(p, cost, y, v, y).h_tilde
}

/// Limits of a policy whose start fractions are fixed in advance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyEvaluation {
    /// Smallest fixed point of the frozen `Ĩ`; also the limit of `T/m`.
    pub y: f64,
    pub defaults: f64,
    pub interventions: f64,
    /// Left derivative of the frozen `Ĩ` at `y`.
    pub slope: f64,
    pub stable: bool,
}

/// Evaluates a fixed threshold policy in the large-network limit.
///
/// `start(i, j, c)` is the scaled time from which state `(i, j, c, c - 1)` is
/// helped, `None` for never. Start fractions must be nonincreasing in `c`
/// within each `(i, j)`, so that a node helped once is helped on every later
/// hit; every policy this crate builds has that shape.
///
/// With frozen thresholds a node of equity `c` defaults by time `u` iff its
/// `c`-th hit lands before `min(x_c, u)`, giving
/// `Ĩ_F(u) = (1/λ) Σ j p(i,j,c) P(Bin(i, min(x_c, u)) ≥ c)`. The cascade
/// stops at the smallest fixed point of `Ĩ_F`.
pub fn evaluate_policy(
    p: &JointDistribution,
    start: impl Fn(u32, u32, u32) -> Option<f64>,
) -> PolicyEvaluation {
    let frozen = |u: f64| -> f64 {
        let mut acc = 0.0;
        for b in p.blocks() {
            for (c, &m) in b.by_equity.iter().enumerate() {
                let c = c as u32;
                let x = if c == 0 { u } else { start(b.i, b.j, c).map_or(u, |x| x.min(u)) };
                acc += b.j as f64 * m * binom_tail(b.i, c as i64, x);
            }
        }
        acc / p.lambda()
    };
    let (y, _) = super::smallest_fixed_point(frozen);
    policy_limits(p, y, start)
}

/// Default and intervention fractions of a frozen policy stopped at `y`,
/// with the left derivative of the frozen `Ĩ` there.
pub fn policy_limits(
    p: &JointDistribution,
    y: f64,
    start: impl Fn(u32, u32, u32) -> Option<f64>,
) -> PolicyEvaluation {
    let mut defaults = 0.0;
    let mut interventions = 0.0;
    let mut slope = 0.0;
    for b in p.blocks() {
        for (c, &m) in b.by_equity.iter().enumerate() {
            let c = c as u32;
            let x = if c == 0 { None } else { start(b.i, b.j, c) };
            let effective = x.map_or(y, |x| x.min(y));
            defaults += m * binom_tail(b.i, c as i64, effective);
            if c >= 1 {
                interventions += m * expected_interventions(b.i, c, effective, y);
                if x.is_none_or(|x| x >= y) {
                    slope += b.j as f64 * m * b.i as f64 * binom_pmf(b.i - 1, c - 1, y);
                }
            }
        }
    }
    slope /= p.lambda();
    PolicyEvaluation { y, defaults, interventions, slope, stable: y >= 1.0 || slope < 1.0 - 1e-9 }
}
