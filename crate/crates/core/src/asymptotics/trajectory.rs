//! Limiting state densities `s_τ` over surviving vulnerable states.
//!
//! For each degree pair `(i, j)` the states are `(c, l)` with
//! `0 <= l < c <= i`, stored at `c(c-1)/2 + l`, followed by the absorbing
//! helped state `(i + 1, i)`. Scaled time `τ` runs over `[0, λ)` and
//! corresponds to step `τ·n` of the finite process.

use std::collections::BTreeMap;

use crate::binomial::choose;
use crate::contagion::{InterventionPolicy, StateAggregate, ThresholdTable};
use crate::distribution::{Class, JointDistribution};
use crate::error::{Error, Result};

/// Largest `τ / λ` accepted by the RK4 integrator.
pub const RK4_HORIZON: f64 = 0.95;

#[inline]
fn slot(c: u32, l: u32) -> usize {
    (c * (c - 1) / 2 + l) as usize
}

#[inline]
fn top(i: u32) -> usize {
    (i * (i + 1) / 2) as usize
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryBlock {
    pub i: u32,
    pub j: u32,
    pub s: Vec<f64>,
}

impl TrajectoryBlock {
    pub fn get(&self, c: u32, l: u32) -> f64 {
        if c == self.i + 1 && l == self.i {
            self.s[top(self.i)]
        } else if l < c && c <= self.i {
            self.s[slot(c, l)]
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub lambda: f64,
    pub tau: f64,
    pub blocks: Vec<TrajectoryBlock>,
}

impl Trajectory {
    /// `s_0^{i,j,c,l} = p(i, j, c)·1{l = 0}`.
    pub fn initial(p: &JointDistribution) -> Self {
        let blocks = p
            .blocks()
            .iter()
            .filter(|b| b.i >= 1)
            .map(|b| {
                let mut s = vec![0.0; top(b.i) + 1];
                for c in 1..=b.i {
                    s[slot(c, 0)] = b.by_equity[c as usize];
                }
                TrajectoryBlock { i: b.i, j: b.j, s }
            })
            .collect();
        Self { lambda: p.lambda(), tau: 0.0, blocks }
    }

    /// `S / n` from a simulated state, on the layout of `like`.
    pub fn from_aggregate(agg: &StateAggregate, n: usize, like: &Trajectory, tau: f64) -> Self {
        let mut out = like.clone();
        out.tau = tau;
        for b in &mut out.blocks {
            let i = b.i;
            for c in 1..=i {
                for l in 0..c {
                    b.s[slot(c, l)] = agg.get((i, b.j, c, l)) as f64 / n as f64;
                }
            }
            b.s[top(i)] = agg.get((i, b.j, i + 1, i)) as f64 / n as f64;
        }
        out
    }

    pub fn get(&self, i: u32, j: u32, c: u32, l: u32) -> f64 {
        self.blocks.iter().find(|b| b.i == i && b.j == j).map_or(0.0, |b| b.get(c, l))
    }

    /// Largest absolute difference over all states. Both trajectories must
    /// share a layout.
    pub fn sup_distance(&self, other: &Trajectory) -> f64 {
        assert_eq!(self.blocks.len(), other.blocks.len(), "trajectories have different layouts");
        self.blocks
            .iter()
            .zip(&other.blocks)
            .flat_map(|(a, b)| a.s.iter().zip(&b.s).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

/// Threshold interventions in scaled time.
///
/// State `(i, j, c, c - 1)` is helped while `τ/λ ∈ [x, y)`; a start fraction
/// of `y` or more, or a missing one, means never. `singular` overrides the
/// start fraction of `(i, j, i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSchedule {
    pub y: f64,
    pub z: f64,
    pub v: f64,
    pub cost: f64,
    pub start: BTreeMap<Class, f64>,
    pub singular: BTreeMap<(u32, u32), f64>,
}

impl ThresholdSchedule {
    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !(unit(self.z) && unit(self.y) && self.z <= self.y) {
            return Err(Error::Validation(format!("need 0 <= z <= y <= 1, got z = {}, y = {}", self.z, self.y)));
        }
        if let Some((k, x)) = self.start.iter().find(|(_, &x)| !unit(x) || x > self.y) {
            return Err(Error::Validation(format!("start fraction {x} for {k:?} outside [0, y]")));
        }
        Ok(())
    }

    pub fn start_fraction(&self, i: u32, j: u32, c: u32) -> Option<f64> {
        let x = if c == i { self.singular.get(&(i, j)).or(self.start.get(&(i, j, c))) } else { self.start.get(&(i, j, c)) };
        x.copied().filter(|&x| x < self.y)
    }

    /// `u^{i,j,c,c-1}` at scaled fraction `frac = τ/λ`.
    pub fn is_active(&self, i: u32, j: u32, c: u32, frac: f64) -> bool {
        self.start_fraction(i, j, c).is_some_and(|x| frac >= x)
    }

    /// Start fractions at which some control switches on, ascending.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut xs: Vec<f64> =
            self.start.values().chain(self.singular.values()).copied().filter(|&x| x < self.y).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        xs
    }

    /// The same rule on the step clock of a network with mean degree `lambda`.
    pub fn to_policy(&self, lambda: f64) -> InterventionPolicy {
        InterventionPolicy::ThresholdTable(ThresholdTable {
            lambda,
            horizon: self.y,
            start: self.start.clone(),
            singular: self.singular.clone(),
        })
    }
}

/// Advances `s1` from its time `τ1` to `tau2` with the controls `b` held fixed.
pub fn propagate_interval(s1: &Trajectory, tau2: f64, b: impl Fn(u32, u32, u32) -> bool) -> Result<Trajectory> {
    let lambda = s1.lambda;
    if !(tau2 < lambda) {
        return Err(Error::Domain(format!("tau = {tau2} is not below lambda = {lambda}")));
    }
    if tau2 < s1.tau {
        return Err(Error::Domain(format!("tau2 = {tau2} precedes tau1 = {}", s1.tau)));
    }
    let r = (lambda - tau2) / (lambda - s1.tau);
    let q = 1.0 - r;
    let blocks = s1
        .blocks
        .iter()
        .map(|blk| {
            let (i, j) = (blk.i, blk.j);
            let old = &blk.s;
            let on: Vec<bool> = (0..=i).map(|k| k >= 1 && b(i, j, k)).collect();
            // chain[q'][c] = Π_{k=q'}^{c-1} b^k, for q' <= c.
            let chain = |from: u32, to_excl: u32| (from..to_excl).all(|k| on[k as usize]);
            let mut s = vec![0.0; old.len()];
            for c in 1..=i {
                for l in 0..c.saturating_sub(1) {
                    let acc: f64 = (0..=l)
                        .map(|rr| old[slot(c, rr)] * choose(i - rr, l - rr) * q.powi((l - rr) as i32))
                        .sum();
                    s[slot(c, l)] = r.powi((i - l) as i32) * acc;
                }
                let mut acc = 0.0;
                for rr in 0..c {
                    let spread = choose(i - rr, c - 1 - rr) * q.powi((c - 1 - rr) as i32);
                    for qq in rr + 1..=c {
                        if chain(qq, c) {
                            acc += old[slot(qq, rr)] * spread;
                        }
                    }
                }
                s[slot(c, c - 1)] = r.powi((i - c + 1) as i32) * acc;
            }
            let mut helped = old[top(i)];
            for rr in 0..i {
                for qq in rr + 1..=i {
                    if chain(qq, i + 1) {
                        helped += old[slot(qq, rr)] * q.powi((i - rr) as i32);
                    }
                }
            }
            s[top(i)] = helped;
            TrajectoryBlock { i, j, s }
        })
        .collect();
    Ok(Trajectory { lambda, tau: tau2, blocks })
}

/// Closed-form `s_τ` under a threshold schedule, restarting at every
/// breakpoint.
pub fn closed_form(p: &JointDistribution, schedule: &ThresholdSchedule, tau: f64) -> Result<Trajectory> {
    let lambda = p.lambda();
    let mut state = Trajectory::initial(p);
    let mut cuts: Vec<f64> =
        schedule.breakpoints().into_iter().map(|x| x * lambda).filter(|&t| t > 0.0 && t < tau).collect();
    cuts.push(tau);
    for t in cuts {
        let frac = state.tau / lambda;
        state = propagate_interval(&state, t, |i, j, c| schedule.is_active(i, j, c, frac))?;
    }
    Ok(state)
}

/// RK4 integration of the state equations with step at most `h`.
///
/// Each block evolves as
/// `(λ-τ) ds^{c,0} = -i s^{c,0}`,
/// `(λ-τ) ds^{c,l} = (i-l+1) s^{c,l-1} - (i-l) s^{c,l}` for `1 <= l <= c-2`,
/// `(λ-τ) ds^{c,c-1} = (i-c+2)(u^{c-1} s^{c-1,c-2} + s^{c,c-2}) - (i-c+1) s^{c,c-1}`,
/// `(λ-τ) ds^{i+1,i} = u^i s^{i,i-1}`.
pub fn integrate_rk4(p: &JointDistribution, schedule: &ThresholdSchedule, tau: f64, h: f64) -> Result<Trajectory> {
    let lambda = p.lambda();
    if tau > RK4_HORIZON * lambda {
        return Err(Error::Domain(format!("tau = {tau} exceeds {RK4_HORIZON}·lambda")));
    }
    if !(h > 0.0) {
        return Err(Error::Validation("step must be positive".into()));
    }
    let mut state = Trajectory::initial(p);
    let mut cuts: Vec<f64> =
        schedule.breakpoints().into_iter().map(|x| x * lambda).filter(|&t| t > 0.0 && t < tau).collect();
    cuts.push(tau);
    for end in cuts {
        let frac = state.tau / lambda;
        let controls: Vec<Vec<bool>> = state
            .blocks
            .iter()
            .map(|b| (0..=b.i).map(|c| c >= 1 && schedule.is_active(b.i, b.j, c, frac)).collect())
            .collect();
        let span = end - state.tau;
        if span <= 0.0 {
            continue;
        }
        let steps = (span / h).ceil().max(1.0) as usize;
        let dt = span / steps as f64;
        for _ in 0..steps {
            let t = state.tau;
            for (blk, u) in state.blocks.iter_mut().zip(&controls) {
                let y0 = blk.s.clone();
                let k1 = rhs(blk.i, u, &y0, lambda - t);
                let y1 = axpy(&y0, &k1, 0.5 * dt);
                let k2 = rhs(blk.i, u, &y1, lambda - t - 0.5 * dt);
                let y2 = axpy(&y0, &k2, 0.5 * dt);
                let k3 = rhs(blk.i, u, &y2, lambda - t - 0.5 * dt);
                let y3 = axpy(&y0, &k3, dt);
                let k4 = rhs(blk.i, u, &y3, lambda - t - dt);
                for (n, s) in blk.s.iter_mut().enumerate() {
                    *s += dt / 6.0 * (k1[n] + 2.0 * k2[n] + 2.0 * k3[n] + k4[n]);
                }
            }
            state.tau = t + dt;
        }
        state.tau = end;
    }
    Ok(state)
}

fn axpy(y: &[f64], k: &[f64], a: f64) -> Vec<f64> {
    y.iter().zip(k).map(|(y, k)| y + a * k).collect()
}

fn rhs(i: u32, u: &[bool], s: &[f64], remaining: f64) -> Vec<f64> {
    let mut d = vec![0.0; s.len()];
    let fi = i as f64;
    for c in 1..=i {
        d[slot(c, 0)] = -fi * s[slot(c, 0)];
        for l in 1..c.saturating_sub(1) {
            d[slot(c, l)] = (fi - l as f64 + 1.0) * s[slot(c, l - 1)] - (fi - l as f64) * s[slot(c, l)];
        }
        if c >= 2 {
            let w = fi - c as f64 + 2.0;
            let inflow = if u[c as usize - 1] { s[slot(c - 1, c - 2)] } else { 0.0 };
            d[slot(c, c - 1)] = w * (inflow + s[slot(c, c - 2)]) - (fi - c as f64 + 1.0) * s[slot(c, c - 1)];
        }
    }
    if u[i as usize] {
        d[top(i)] = s[slot(i, i - 1)];
    }
    for x in &mut d {
        *x /= remaining;
    }
    d
}
