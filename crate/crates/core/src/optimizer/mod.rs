//! The finite optimisation problem for the regulator's threshold policy.
//!
//! Unknowns are the terminal fraction `y`, the multiplier `v` and the
//! singular start `z`. Feasible points satisfy
//! `r1 = (1 - y)(H̃(y, v) - λv) = 0` and `r2 = Ĩ(y, v, z) - y = 0`; the
//! objective is `K·it + J̃`. Roots are searched in two stages: `z = y` with
//! `(y, v)` free, then for each out-degree `j` with `v = (1 - K)/j` fixed and
//! `(y, z)` free. Boundary points `y = 0` and `y = 1` are added when
//! feasible and the cheapest candidate wins.

mod newton;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{
    constraint_terms, policy_limits, program_terms, x_threshold_exact, Multiplier, ThresholdSchedule,
};
use crate::contagion::InterventionPolicy;
use crate::distribution::JointDistribution;
use crate::error::{validation, Error, Result};

pub use newton::{damped_newton, NewtonOptions};

/// Residual bound for accepting a root.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Roots closer than this in every coordinate are merged.
pub const DEDUP_TOL: f64 = 1e-8;
/// Interior roots above `1 - BOUNDARY_GAP` are left to the `y = 1` candidate,
/// since `r1` vanishes there through its `(1 - y)` factor alone.
const BOUNDARY_GAP: f64 = 1e-7;
/// Objective values closer than this count as tied.
const TIE_TOL: f64 = 1e-12;

const Y_STARTS: usize = 19;
const V_STARTS: [f64; 17] =
    [0.0, 1e-3, -1e-3, 1e-2, -1e-2, 0.1, -0.1, 0.3, -0.3, 1.0, -1.0, 3.0, -3.0, 10.0, -10.0, 100.0, -100.0];
/// Grid used to bracket the one-dimensional stage-B equation in `y`.
const STAGE_B_GRID: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "snake_case")]
pub enum Branch {
    StageA,
    StageB { j: u32 },
    Boundary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpSolution {
    pub y: f64,
    pub v: Multiplier,
    pub z: f64,
    pub cost: f64,
    pub objective: f64,
    pub it_value: f64,
    pub jtilde_value: f64,
    /// Left derivative of `Ĩ(·; v, z)` at `y` with thresholds held at their
    /// values for this solution.
    pub slope: f64,
    pub stable: bool,
    pub branch: Branch,
    /// `(r1, r2)` at the solution.
    pub residuals: [f64; 2],
}

impl OpSolution {
    fn at(p: &JointDistribution, cost: f64, y: f64, v: Multiplier, z: f64, branch: Branch) -> Self {
        let t = program_terms(p, cost, y, v, z);
        let residuals = [(1.0 - y) * (t.h_tilde - p.lambda() * v.value), t.i_tilde - y];
        let schedule = schedule_for(p, cost, y, v, z);
        let limits = policy_limits(p, y, |i, j, c| schedule.start_fraction(i, j, c));
        Self {
            y,
            v,
            z,
            cost,
            objective: cost * t.it + t.j_tilde,
            it_value: t.it,
            jtilde_value: t.j_tilde,
            slope: limits.slope,
            stable: y >= 1.0 || limits.stable,
            branch,
            residuals,
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.residuals.iter().all(|r| r.abs() < FEASIBILITY_TOL)
    }

    /// Start fractions implied by this solution.
    pub fn schedule(&self, p: &JointDistribution) -> ThresholdSchedule {
        schedule_for(p, self.cost, self.y, self.v, self.z)
    }
}

fn schedule_for(p: &JointDistribution, cost: f64, y: f64, v: Multiplier, z: f64) -> ThresholdSchedule {
    let mut start = std::collections::BTreeMap::new();
    let mut singular = std::collections::BTreeMap::new();
    for b in p.blocks() {
        if b.i == 0 || b.by_equity.iter().skip(1).all(|&m| m == 0.0) {
            continue;
        }
        for c in 1..=b.i {
            start.insert((b.i, b.j, c), x_threshold_exact(b.i, b.j, c, cost, v, y));
        }
        if v.is_singular(b.j, cost) {
            singular.insert((b.i, b.j), z);
        }
    }
    ThresholdSchedule { y, z, v: v.value, cost, start, singular }
}

fn check_cost(cost: f64) -> Result<()> {
    if !(cost > 0.0 && cost.is_finite()) {
        return Err(validation(format!("cost K = {cost} must be positive")));
    }
    Ok(())
}

fn residuals(p: &JointDistribution, cost: f64, y: f64, v: Multiplier, z: f64) -> [f64; 2] {
    let (it, ht) = constraint_terms(p, cost, y, v, z);
    [(1.0 - y) * (ht - p.lambda() * v.value), it - y]
}

fn dedup(mut roots: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    let mut out: Vec<[f64; 2]> = Vec::new();
    roots.retain(|r| r.iter().all(|x| x.is_finite()));
    for r in roots {
        if !out.iter().any(|o| (o[0] - r[0]).abs() < DEDUP_TOL && (o[1] - r[1]).abs() < DEDUP_TOL) {
            out.push(r);
        }
    }
    out
}

/// Roots with `z = y`, found by damped Newton in `(y, v)` from a grid of starts.
pub fn solve_stage_a(p: &JointDistribution, cost: f64) -> Result<Vec<OpSolution>> {
    check_cost(cost)?;
    let starts: Vec<[f64; 2]> = (1..=Y_STARTS)
        .flat_map(|k| V_STARTS.iter().map(move |&v| [k as f64 / (Y_STARTS + 1) as f64, v]))
        .collect();
    let f = |x: [f64; 2]| residuals(p, cost, x[0], Multiplier::free(x[1]), x[0]);
    let project = |x: [f64; 2]| [x[0].clamp(0.0, 1.0), x[1]];
    let roots: Vec<[f64; 2]> = starts
        .par_iter()
        .map(|&s| damped_newton(f, s, project, NewtonOptions::default()))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .filter(|r| r[0] < 1.0 - BOUNDARY_GAP)
        .collect();
    let mut roots = dedup(roots);
    roots.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    Ok(roots
        .into_iter()
        .map(|r| OpSolution::at(p, cost, r[0], Multiplier::free(r[1]), r[0], Branch::StageA))
        .filter(OpSolution::is_feasible)
        .collect())
}

/// Roots with out-degree `j` singular (`v = (1 - K)/j`).
///
/// `r1` does not involve `z`, so its roots in `y` are bracketed on a grid and
/// bisected; for each, `Ĩ` is nondecreasing in `z` and `r2 = 0` is solved by
/// bisection on `[0, y]`.
pub fn solve_stage_b(p: &JointDistribution, cost: f64, j: u32) -> Result<Vec<OpSolution>> {
    check_cost(cost)?;
    if j == 0 || !p.blocks().iter().any(|b| b.j == j) {
        return Err(validation(format!("out-degree {j} is not in the support")));
    }
    let v = Multiplier::singular(j, cost);
    let r1 = |y: f64| residuals(p, cost, y, v, y)[0];
    let ys: Vec<f64> = bracket_roots(r1, 0.0, 1.0 - BOUNDARY_GAP, STAGE_B_GRID);
    let mut out = Vec::new();
    for y in ys {
        let r2 = |z: f64| residuals(p, cost, y, v, z)[1];
        let (lo, hi) = (r2(0.0), r2(y));
        let z = if hi.abs() < FEASIBILITY_TOL * 1e-3 {
            Some(y)
        } else if lo > 0.0 || hi < 0.0 {
            None
        } else {
            Some(bisect(r2, 0.0, y))
        };
        if let Some(z) = z {
            let sol = OpSolution::at(p, cost, y, v, z, Branch::StageB { j });
            if sol.is_feasible() {
                out.push(sol);
            }
        }
    }
    Ok(out)
}

/// Zeros of `f` on `[a, b]`: exact grid hits and bisected sign changes.
fn bracket_roots(f: impl Fn(f64) -> f64, a: f64, b: f64, cells: usize) -> Vec<f64> {
    let xs: Vec<f64> = (0..=cells).map(|k| a + (b - a) * k as f64 / cells as f64).collect();
    let fs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let mut roots = Vec::new();
    for k in 0..cells {
        if fs[k] == 0.0 {
            roots.push(xs[k]);
        } else if fs[k] * fs[k + 1] < 0.0 {
            roots.push(bisect(&f, xs[k], xs[k + 1]));
        }
    }
    if fs[cells] == 0.0 {
        roots.push(xs[cells]);
    }
    roots
}

/// Bisection to adjacent floats for a sign change on `[a, b]`.
fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    if f(a).abs() <= f(b).abs() {
        a
    } else {
        b
    }
}

/// Candidates at `y = 0` (no initial default mass) and `y = 1` (everything
/// vulnerable and no intervention forced from the start).
fn boundary_candidates(p: &JointDistribution, cost: f64) -> Vec<OpSolution> {
    let mut out = Vec::new();
    let lambda = p.lambda();
    if residuals(p, cost, 0.0, Multiplier::free(0.0), 0.0)[1].abs() < FEASIBILITY_TOL {
        // H̃(0, v) is bounded and piecewise linear, so r1 changes sign.
        let r1 = |v: f64| residuals(p, cost, 0.0, Multiplier::free(v), 0.0)[0];
        let span = 10.0 * (1.0 + cost) * p.max_degree().max(1) as f64 / lambda.max(1e-12) + 10.0;
        if r1(-span) * r1(span) <= 0.0 {
            let v = bisect(r1, -span, span);
            out.push(OpSolution::at(p, cost, 0.0, Multiplier::free(v), 0.0, Branch::Boundary));
        }
    }
    // All branch-one thresholds: v at least (1 - K)/j for every j.
    let v = p.vulnerable_out_degrees().iter().map(|&j| (1.0 - cost) / j as f64).fold(0.0, f64::max);
    let at_one = OpSolution::at(p, cost, 1.0, Multiplier::free(v), 1.0, Branch::Boundary);
    if at_one.residuals[1].abs() < FEASIBILITY_TOL {
        out.push(at_one);
    }
    out
}

/// Every feasible candidate, sorted by objective (ties: stable first, then
/// smaller `y`).
pub fn all_candidates(p: &JointDistribution, cost: f64) -> Result<Vec<OpSolution>> {
    check_cost(cost)?;
    let mut all = solve_stage_a(p, cost)?;
    for j in p.vulnerable_out_degrees() {
        all.extend(solve_stage_b(p, cost, j)?);
    }
    all.extend(boundary_candidates(p, cost));
    all.sort_by(|a, b| {
        if (a.objective - b.objective).abs() > TIE_TOL {
            a.objective.total_cmp(&b.objective)
        } else {
            b.stable.cmp(&a.stable).then(a.y.total_cmp(&b.y))
        }
    });
    Ok(all)
}

/// The cheapest feasible candidate.
///
/// When it is unstable with `y < 1` it is still returned, with
/// `stable = false`; limit predictions then refuse it.
pub fn solve_op(p: &JointDistribution, cost: f64) -> Result<OpSolution> {
    all_candidates(p, cost)?
        .into_iter()
        .next()
        .ok_or_else(|| Error::Unstable("no feasible point of the optimisation problem was found".into()))
}

/// The finite-`n` threshold policy: class `(i, j, c)` is helped from step
/// `n·λ·x` on, singular `(i, j, i)` from `n·λ·z`.
pub fn extract_policy(sol: &OpSolution, p: &JointDistribution) -> InterventionPolicy {
    sol.schedule(p).to_policy(p.lambda())
}

/// Limits of `(D/n, IT/n, T/m)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub defaults: f64,
    pub interventions: f64,
    pub time: f64,
}

pub fn asymptotic_prediction(sol: &OpSolution) -> Result<Prediction> {
    if sol.y >= 1.0 {
        return Ok(Prediction { defaults: 1.0, interventions: sol.it_value, time: 1.0 });
    }
    if !sol.stable {
        return Err(Error::Unstable(format!(
            "y = {} is an unstable fixed point (slope {}); no limit theorem applies",
            sol.y, sol.slope
        )));
    }
    Ok(Prediction { defaults: sol.jtilde_value, interventions: sol.it_value, time: sol.y })
}
