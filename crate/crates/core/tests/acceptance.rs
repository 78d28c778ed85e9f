//! One PASS/FAIL line per acceptance criterion, written straight to stdout so
//! that the lines survive the harness's output capture.

mod common;

use std::io::Write;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use bailout_core::asymptotics::{
    closed_form, evaluate_policy, integrate_rk4, j_of, smallest_fixed_point, i_of, RK4_HORIZON,
};
use bailout_core::contagion::{exact_expectation, run, InterventionPolicy};
use bailout_core::distribution::{build_zipf_copula, empirical_counts, Class, JointDistribution};
use bailout_core::experiments::{dispersion_trends, run_study, StudyConfig, StudyResult, Summary, Variable};
use bailout_core::network::NodePopulation;
use bailout_core::optimizer::{extract_policy, solve_op};
use bailout_core::rng::run_stream;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ODE_TOL: f64 = 1e-8;
const ODE_FIXTURES: usize = 24;
const RK4_STEP: f64 = 1e-3;
const MC_RUNS: u32 = 10_000;
const SE_FACTOR: f64 = 3.0;
const FIXED_POINT_TOL: f64 = 1e-10;
const FEASIBILITY_TOL: f64 = 1e-9;
const GRID_GAP: f64 = 2e-3;
const SLOPE_AGREEMENT: f64 = 0.2;
const MAX_INVERSIONS: usize = 1;

fn report(id: u32, name: &str, pass: bool, elapsed: Duration, budget: Duration, detail: &str) {
    let ok = pass && elapsed <= budget;
    let line = format!(
        "criterion {id} {name}: {} ({detail}; {:.2?} of {:.0?})",
        if ok { "PASS" } else { "FAIL" },
        elapsed,
        budget
    );
    let _ = writeln!(std::io::stdout().lock(), "{line}");
    assert!(ok, "{line}");
}

#[test]
fn criterion_1_ode_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..ODE_FIXTURES {
        let p = common::random_distribution(&mut rng, 5);
        let sched = common::random_schedule(&mut rng, &p);
        let tau = rng.random_range(0.05..=RK4_HORIZON) * p.lambda();
        let exact = closed_form(&p, &sched, tau).unwrap();
        let numeric = integrate_rk4(&p, &sched, tau, RK4_STEP).unwrap();
        worst = worst.max(exact.sup_distance(&numeric));
    }
    report(
        1,
        "closed form matches RK4",
        worst < ODE_TOL,
        start.elapsed(),
        Duration::from_secs(60),
        &format!("{ODE_FIXTURES} fixtures, worst sup-distance {worst:.2e} < {ODE_TOL:e}"),
    );
}

#[test]
fn criterion_2_exact_oracle() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut checked = 0;
    let fixtures = common::small_fixtures();
    for (cell, (name, pop)) in fixtures.iter().enumerate() {
        assert!(pop.m() <= 6);
        for (q, (policy_name, policy)) in common::small_policies(pop).into_iter().enumerate() {
            let exact = exact_expectation(pop, &policy).unwrap();
            let mut samples = [Vec::new(), Vec::new(), Vec::new()];
            for r in 0..MC_RUNS {
                let out = run(pop, &policy, &mut run_stream(2, (cell * 16 + q) as u32, r));
                samples[0].push(out.defaults as f64);
                samples[1].push(out.interventions as f64);
                samples[2].push(out.steps as f64);
            }
            let targets = [exact.defaults, exact.interventions, exact.steps];
            for (k, label) in ["D", "IT", "T"].iter().enumerate() {
                let s = Summary::of(&samples[k]);
                let se = s.standard_error(MC_RUNS as usize);
                let gap = (s.mean - targets[k]).abs();
                checked += 1;
                if gap > SE_FACTOR * se + 1e-12 {
                    failures.push(format!("{name}/{policy_name}/{label}: {} vs {}", s.mean, targets[k]));
                }
            }
        }
    }
    let one_regular = exact_expectation(&fixtures[0].1, &InterventionPolicy::None).unwrap();
    if one_regular.defaults != 2.0 {
        failures.push(format!("one-regular n = 3 gives E[D] = {}", one_regular.defaults));
    }
    report(
        2,
        "Monte Carlo agrees with exact expectations",
        failures.is_empty(),
        start.elapsed(),
        Duration::from_secs(60),
        &if failures.is_empty() {
            format!("{checked} means within {SE_FACTOR} SE over {MC_RUNS} runs, one-regular E[D] = 2")
        } else {
            failures.join("; ")
        },
    );
}

#[test]
fn criterion_3_analytic_fixed_point() {
    let start = Instant::now();
    let p = common::quadratic();
    let (y, stable) = smallest_fixed_point(|u| i_of(&p, u));
    let j = j_of(&p, y);
    report(
        3,
        "quadratic fixed point",
        (y - 0.25).abs() < FIXED_POINT_TOL && (j - 0.25).abs() < FIXED_POINT_TOL && stable,
        start.elapsed(),
        Duration::from_secs(1),
        &format!("y* = {y:.15}, J(y*) = {j:.15}"),
    );
}

/// Best frozen threshold policy on a single-class law by grid search over
/// start fractions, nonincreasing in equity, with local refinement.
fn grid_minimum(p: &JointDistribution, cost: f64) -> f64 {
    let block = &p.blocks()[0];
    let i = block.i;
    let vulnerable: Vec<u32> = (1..=i).filter(|&c| block.by_equity[c as usize] > 0.0).collect();
    // A start fraction above 1 stands for never.
    let objective = |xs: &[f64]| {
        let e = evaluate_policy(p, |_, _, c| {
            vulnerable.iter().position(|&v| v == c).map(|k| xs[k]).filter(|&x| x <= 1.0)
        });
        e.defaults + cost * e.interventions
    };
    let axis = |lo: f64, hi: f64, h: f64| -> Vec<f64> {
        let n = ((hi - lo) / h).round() as usize;
        (0..=n).map(|k| lo + k as f64 * h).collect()
    };
    match vulnerable.len() {
        1 => axis(0.0, 1.001, 1e-3).iter().map(|&x| objective(&[x])).fold(f64::INFINITY, f64::min),
        2 => {
            let mut best = (f64::INFINITY, 0.0, 0.0);
            let coarse = axis(0.0, 1.01, 1e-2);
            for &a in &coarse {
                for &b in coarse.iter().filter(|&&b| b <= a) {
                    let v = objective(&[a, b]);
                    if v < best.0 {
                        best = (v, a, b);
                    }
                }
            }
            let (_, a0, b0) = best;
            for a in axis((a0 - 1e-2).max(0.0), (a0 + 1e-2).min(1.001), 1e-3) {
                for b in axis((b0 - 1e-2).max(0.0), (b0 + 1e-2).min(a), 1e-3) {
                    best.0 = best.0.min(objective(&[a, b]));
                }
            }
            best.0
        }
        _ => unreachable!("fixtures have at most two vulnerable equities"),
    }
}

#[test]
fn criterion_4_optimality_sandwich() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut fixtures: Vec<(JointDistribution, f64)> = vec![
        (build_zipf_copula(0.5, 0.8, 0.7, 0.9, 10).unwrap(), 0.5),
        (common::quadratic(), 0.5),
        (common::quadratic(), 1.6),
        (common::quadratic(), 10.0),
    ];
    for _ in 0..12 {
        let p = common::random_distribution(&mut rng, 5);
        fixtures.push((p, rng.random_range(0.2..3.0)));
    }
    for (k, (p, cost)) in fixtures.iter().enumerate() {
        let sol = solve_op(p, *cost).unwrap();
        if sol.residuals.iter().any(|r| r.abs() >= FEASIBILITY_TOL) {
            failures.push(format!("fixture {k}: residuals {:?}", sol.residuals));
        }
        let none = evaluate_policy(p, |_, _, _| None);
        let all = evaluate_policy(p, |_, _, _| Some(0.0));
        let bound = none.defaults.min(all.defaults + cost * all.interventions);
        if sol.objective > bound + 1e-12 {
            failures.push(format!("fixture {k}: objective {} above {bound}", sol.objective));
        }
    }
    let single: Vec<(Vec<(Class, f64)>, f64)> = vec![
        (vec![((1, 1, 0), 0.3), ((1, 1, 1), 0.7)], 0.5),
        (vec![((1, 1, 0), 0.3), ((1, 1, 1), 0.7)], 1.5),
        (vec![((2, 2, 0), 0.2), ((2, 2, 2), 0.8)], 0.5),
        (vec![((2, 2, 0), 0.2), ((2, 2, 2), 0.8)], 1.6),
        (vec![((2, 2, 0), 0.2), ((2, 2, 2), 0.8)], 10.0),
        (vec![((2, 2, 0), 0.15), ((2, 2, 1), 0.35), ((2, 2, 2), 0.5)], 0.5),
        (vec![((2, 2, 0), 0.15), ((2, 2, 1), 0.35), ((2, 2, 2), 0.5)], 2.0),
        (vec![((3, 3, 0), 0.2), ((3, 3, 2), 0.5), ((3, 3, 3), 0.3)], 1.0),
        (vec![((3, 3, 0), 0.1), ((3, 3, 1), 0.9)], 0.8),
    ];
    let mut worst_gap = 0.0f64;
    for (entries, cost) in &single {
        let p = JointDistribution::from_entries(entries.clone()).unwrap();
        let sol = solve_op(&p, *cost).unwrap();
        let grid = grid_minimum(&p, *cost);
        let gap = (sol.objective - grid).abs();
        worst_gap = worst_gap.max(gap);
        if gap > GRID_GAP {
            failures.push(format!("{entries:?} at K = {cost}: optimum {} vs grid {grid}", sol.objective));
        }
    }
    report(
        4,
        "optimum is feasible and beats extremes and the grid",
        failures.is_empty(),
        start.elapsed(),
        Duration::from_secs(300),
        &if failures.is_empty() {
            format!("{} laws feasible to {FEASIBILITY_TOL:e}, worst grid gap {worst_gap:.2e}", fixtures.len())
        } else {
            failures.join("; ")
        },
    );
}

fn reference_study() -> &'static (StudyResult, Duration) {
    static STUDY: OnceLock<(StudyResult, Duration)> = OnceLock::new();
    STUDY.get_or_init(|| {
        let start = Instant::now();
        let res = run_study(&StudyConfig::reference()).unwrap();
        (res, start.elapsed())
    })
}

#[test]
fn criterion_5_limit_consistency() {
    let start = Instant::now();
    let (study, study_time) = reference_study();
    let n = *study.sizes.last().unwrap();
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for policy in &study.policies {
        for variable in Variable::ALL {
            let cell = study.cell(n, policy, variable).expect("cell present");
            let Some(theory) = cell.theory_pn else {
                failures.push(format!("{policy} {}: no limit", variable.name()));
                continue;
            };
            let se = cell.summary.standard_error(study.runs);
            let z = (cell.summary.mean - theory).abs() / se;
            worst = worst.max(z);
            if z > SE_FACTOR {
                failures.push(format!("{policy} {}: {} vs {theory}", variable.name(), cell.summary.mean));
            }
        }
    }
    report(
        5,
        "simulated means match limits at n = 10^4",
        failures.is_empty() && study.diagnostics.is_empty(),
        *study_time + start.elapsed(),
        Duration::from_secs(300),
        &if failures.is_empty() {
            format!("worst deviation {worst:.2} SE over {} runs", study.runs)
        } else {
            failures.join("; ")
        },
    );
}

#[test]
fn criterion_6_convergence_shape() {
    let start = Instant::now();
    let (study, study_time) = reference_study();
    let mut failures = Vec::new();
    let mut notes = Vec::new();
    for t in dispersion_trends(study) {
        let label = format!("{} {}", t.policy, t.variable.name());
        let (Some(sd), Some(iqr)) = (t.sd_fit, t.iqr_fit) else {
            failures.push(format!("{label}: no fit"));
            continue;
        };
        if sd.slope >= 0.0 || iqr.slope >= 0.0 {
            failures.push(format!("{label}: slopes {:.3}, {:.3}", sd.slope, iqr.slope));
        }
        if (sd.slope - iqr.slope).abs() > SLOPE_AGREEMENT {
            failures.push(format!("{label}: sd slope {:.3} vs IQR slope {:.3}", sd.slope, iqr.slope));
        }
        if t.sd_inversions > MAX_INVERSIONS || t.iqr_inversions > MAX_INVERSIONS {
            failures.push(format!("{label}: {} sd and {} IQR increases", t.sd_inversions, t.iqr_inversions));
        } else if t.sd_inversions + t.iqr_inversions > 0 {
            notes.push(format!("{label} {}+{}", t.sd_inversions, t.iqr_inversions));
        }
    }
    report(
        6,
        "dispersion decays with matching exponents",
        failures.is_empty(),
        *study_time + start.elapsed(),
        Duration::from_secs(600),
        &if failures.is_empty() {
            format!("single inversions flagged: [{}]", notes.join(", "))
        } else {
            failures.join("; ")
        },
    );
}

#[test]
fn criterion_7_policy_structure() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let reference = build_zipf_copula(0.5, 0.8, 0.7, 0.9, 10).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut laws = vec![(reference.clone(), 0.5), (common::quadratic(), 1.6), (common::quadratic(), 0.5)];
    for _ in 0..8 {
        let p = common::random_distribution(&mut rng, 5);
        laws.push((p, rng.random_range(0.2..3.0)));
    }
    for (k, (p, cost)) in laws.iter().enumerate() {
        let sol = solve_op(p, *cost).unwrap();
        let sched = sol.schedule(p);
        for b in p.blocks() {
            let xs: Vec<f64> = (1..=b.i).map(|c| sched.start_fraction(b.i, b.j, c).unwrap_or(sol.y)).collect();
            if xs.iter().any(|&x| x > sol.y) || xs.windows(2).any(|w| w[1] > w[0]) {
                failures.push(format!("law {k}, block ({}, {}): {xs:?} with y = {}", b.i, b.j, sol.y));
            }
        }
        if let InterventionPolicy::ThresholdTable(t) = extract_policy(&sol, p) {
            if t.start.values().any(|&x| x > t.horizon) {
                failures.push(format!("law {k}: extracted start beyond the horizon"));
            }
        }
    }
    let counts = empirical_counts(&reference, 10_000).unwrap();
    let pop = NodePopulation::instantiate(&counts).unwrap();
    let mut seeds = 0;
    for r in 0..100 {
        let out = run(&pop, &InterventionPolicy::Complete, &mut run_stream(7, 0, r));
        seeds += 1;
        if out.defaults != out.initial_defaults {
            failures.push(format!("seed {r}: {} defaults from {}", out.defaults, out.initial_defaults));
        }
    }
    for (name, pop) in common::small_fixtures() {
        for r in 0..100 {
            let out = run(&pop, &InterventionPolicy::Complete, &mut run_stream(7, 1, r));
            seeds += 1;
            if out.defaults != out.initial_defaults {
                failures.push(format!("{name} seed {r}: extra defaults"));
            }
        }
    }
    report(
        7,
        "thresholds are bounded and monotone, complete help stops contagion",
        failures.is_empty(),
        start.elapsed(),
        Duration::from_secs(60),
        &if failures.is_empty() {
            format!("{} laws, {seeds} complete-intervention runs", laws.len())
        } else {
            failures.join("; ")
        },
    );
}
