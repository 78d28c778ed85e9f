//! Batch Monte Carlo studies across network sizes and policies.
//!
//! Every run is a pure function of the master seed, the cell index and the
//! run index, so a study is reproducible regardless of thread scheduling.

mod compare;
mod powerlaw;
mod stats;
pub mod svg;

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::evaluate_policy;
use crate::contagion::{run, InterventionPolicy};
use crate::distribution::{empirical_counts, DistributionSpec, JointDistribution};
use crate::error::{validation, Error, Result};
use crate::network::NodePopulation;
use crate::optimizer::{asymptotic_prediction, extract_policy, solve_op, OpSolution, Prediction};
use crate::rng::run_stream;

pub use compare::{compare_policies, write_comparison, ComparisonReport, ComparisonRow};
pub use powerlaw::{powerlaw_fit, PowerLawFit};
pub use stats::{quantile, Summary};

/// A policy as named in a study configuration.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicySpec {
    None,
    Complete,
    /// Thresholds from the optimisation problem solved on the network's own
    /// empirical law.
    Optimal,
    /// Help every one-loss-from-default node with in-degree in `lo..=hi`
    /// from the first step.
    Alternative {
        #[serde(default = "default_lo")]
        lo: u32,
        #[serde(default = "default_hi")]
        hi: u32,
    },
}

fn default_lo() -> u32 {
    8
}

fn default_hi() -> u32 {
    10
}

impl PolicySpec {
    pub fn label(&self) -> String {
        match self {
            PolicySpec::None => "none".into(),
            PolicySpec::Complete => "complete".into(),
            PolicySpec::Optimal => "optimal".into(),
            PolicySpec::Alternative { lo, hi } if (*lo, *hi) == (8, 10) => "alternative".into(),
            PolicySpec::Alternative { lo, hi } => format!("alternative_{lo}_{hi}"),
        }
    }

    /// Concrete policy for a network whose empirical law is `pn`, plus the
    /// solution it came from for the optimal policy.
    pub fn instantiate(&self, pn: &JointDistribution, cost: f64) -> Result<(InterventionPolicy, Option<OpSolution>)> {
        Ok(match *self {
            PolicySpec::None => (InterventionPolicy::None, None),
            PolicySpec::Complete => (InterventionPolicy::Complete, None),
            PolicySpec::Alternative { lo, hi } => (InterventionPolicy::DegreeRange { lo, hi }, None),
            PolicySpec::Optimal => {
                let sol = solve_op(pn, cost)?;
                (extract_policy(&sol, pn), Some(sol))
            }
        })
    }

    /// Large-network limits of `(D/n, IT/n, T/m)` under law `p`.
    pub fn theory(&self, p: &JointDistribution, cost: f64) -> Result<Prediction> {
        let eval = match *self {
            PolicySpec::Optimal => return asymptotic_prediction(&solve_op(p, cost)?),
            PolicySpec::None => evaluate_policy(p, |_, _, _| None),
            PolicySpec::Complete => evaluate_policy(p, |_, _, _| Some(0.0)),
            PolicySpec::Alternative { lo, hi } => {
                evaluate_policy(p, |i, _, _| (lo..=hi).contains(&i).then_some(0.0))
            }
        };
        Ok(Prediction { defaults: eval.defaults, interventions: eval.interventions, time: eval.y })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variable {
    #[serde(rename = "IT/n")]
    Interventions,
    #[serde(rename = "D/n")]
    Defaults,
    #[serde(rename = "T/m")]
    Time,
}

impl Variable {
    pub const ALL: [Variable; 3] = [Variable::Interventions, Variable::Defaults, Variable::Time];

    pub fn name(self) -> &'static str {
        match self {
            Variable::Interventions => "IT/n",
            Variable::Defaults => "D/n",
            Variable::Time => "T/m",
        }
    }

    fn slug(self) -> &'static str {
        match self {
            Variable::Interventions => "interventions",
            Variable::Defaults => "defaults",
            Variable::Time => "time",
        }
    }

    fn of(self, pred: &Prediction) -> f64 {
        match self {
            Variable::Interventions => pred.interventions,
            Variable::Defaults => pred.defaults,
            Variable::Time => pred.time,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub distribution: DistributionSpec,
    pub sizes: Vec<u64>,
    pub runs: usize,
    pub policies: Vec<PolicySpec>,
    /// Cost `K` of one intervention relative to one default.
    pub cost: f64,
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<std::path::PathBuf>,
}

impl StudyConfig {
    /// Zipf degrees and equities on 1..=10 with Gaussian-copula correlation
    /// 0.9, half the nodes initially defaulted, `K = 0.5`, sizes
    /// `5^4..=10^4` and 100 runs each, comparing the optimal and the
    /// degree-8-to-10 policies.
    pub fn reference() -> Self {
        Self {
            distribution: DistributionSpec::ZipfCopula { xi: 0.5, a1: 0.8, a2: 0.7, rho: 0.9, max_deg: 10 },
            sizes: (5..=10u64).map(|k| k.pow(4)).collect(),
            runs: 100,
            policies: vec![PolicySpec::Optimal, PolicySpec::Alternative { lo: 8, hi: 10 }],
            cost: 0.5,
            seed: 20_240_601,
            output_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() || self.sizes[0] == 0 {
            return Err(validation("sizes must be nonempty and positive"));
        }
        if self.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(validation("sizes must be strictly increasing"));
        }
        if self.runs < 2 {
            return Err(validation("at least two runs per cell are needed"));
        }
        if self.policies.is_empty() {
            return Err(validation("no policies given"));
        }
        if !(self.cost > 0.0 && self.cost.is_finite()) {
            return Err(validation("cost must be positive"));
        }
        if self.sizes.len() > u16::MAX as usize || self.policies.len() > u16::MAX as usize {
            return Err(validation("too many cells"));
        }
        Ok(())
    }
}

/// Statistics of one `(n, policy, variable)` cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellStats {
    pub n: u64,
    pub policy: String,
    pub variable: Variable,
    pub summary: Summary,
    pub samples: Vec<f64>,
    pub theory_p: Option<f64>,
    pub theory_pn: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyResult {
    pub cost: f64,
    pub runs: usize,
    pub sizes: Vec<u64>,
    pub policies: Vec<String>,
    pub cells: Vec<CellStats>,
    /// Optimal-policy solutions on each network's empirical law.
    pub solutions: Vec<(u64, OpSolution)>,
    /// Cells that could not be run, and theory values that could not be computed.
    pub diagnostics: Vec<String>,
}

impl StudyResult {
    pub fn cell(&self, n: u64, policy: &str, variable: Variable) -> Option<&CellStats> {
        self.cells.iter().find(|c| c.n == n && c.policy == policy && c.variable == variable)
    }

    /// Rows `n,policy,variable,mean,sd,q1,median,q3,iqr,theory_p,theory_Pn`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,policy,variable,mean,sd,q1,median,q3,iqr,theory_p,theory_Pn\n");
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        for c in &self.cells {
            let s = &c.summary;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                c.n,
                c.policy,
                c.variable.name(),
                s.mean,
                s.sd,
                s.q1,
                s.median,
                s.q3,
                s.iqr,
                opt(c.theory_p),
                opt(c.theory_pn)
            );
        }
        out
    }
}

struct Network {
    n: u64,
    pop: NodePopulation,
    pn: JointDistribution,
}

/// Runs every `(n, policy)` cell of the study.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyResult> {
    cfg.validate()?;
    let p = cfg.distribution.build()?;
    let mut diagnostics = Vec::new();

    let networks: Vec<Result<Network>> = cfg
        .sizes
        .par_iter()
        .map(|&n| {
            let counts = empirical_counts(&p, n)?;
            let pn = JointDistribution::from_counts(&counts)?;
            Ok(Network { n, pop: NodePopulation::instantiate(&counts)?, pn })
        })
        .collect();
    let mut built = Vec::new();
    for (net, &n) in networks.into_iter().zip(&cfg.sizes) {
        match net {
            Ok(net) => built.push(net),
            Err(e) => diagnostics.push(format!("n = {n}: skipped, {e}")),
        }
    }
    if built.is_empty() {
        return Err(Error::Construction(format!("no network could be built: {}", diagnostics.join("; "))));
    }

    let theory_p: Vec<Result<Prediction>> = cfg.policies.par_iter().map(|spec| spec.theory(&p, cfg.cost)).collect();

    struct Cell {
        samples: [Vec<f64>; 3],
        theory_pn: Result<Prediction>,
        solution: Option<OpSolution>,
    }
    let jobs: Vec<(usize, usize)> =
        (0..built.len()).flat_map(|s| (0..cfg.policies.len()).map(move |q| (s, q))).collect();
    let cells: Vec<Result<Cell>> = jobs
        .par_iter()
        .map(|&(s, q)| {
            let net = &built[s];
            let spec = &cfg.policies[q];
            let (policy, solution) = spec.instantiate(&net.pn, cfg.cost)?;
            let theory_pn = match &solution {
                Some(sol) => asymptotic_prediction(sol),
                None => spec.theory(&net.pn, cfg.cost),
            };
            let size_index = cfg.sizes.iter().position(|&n| n == net.n).expect("size from config");
            let cell_id = (size_index as u32) << 16 | q as u32;
            let outcomes: Vec<_> = (0..cfg.runs)
                .into_par_iter()
                .map(|r| run(&net.pop, &policy, &mut run_stream(cfg.seed, cell_id, r as u32)))
                .collect();
            let samples = [
                outcomes.iter().map(|o| o.intervention_fraction()).collect(),
                outcomes.iter().map(|o| o.default_fraction()).collect(),
                outcomes.iter().map(|o| o.time_fraction()).collect(),
            ];
            Ok(Cell { samples, theory_pn, solution })
        })
        .collect();

    let mut out = Vec::new();
    let mut solutions = Vec::new();
    for (&(s, q), cell) in jobs.iter().zip(cells) {
        let n = built[s].n;
        let label = cfg.policies[q].label();
        let cell = match cell {
            Ok(c) => c,
            Err(e) => {
                diagnostics.push(format!("n = {n}, {label}: skipped, {e}"));
                continue;
            }
        };
        if let Some(sol) = cell.solution {
            solutions.push((n, sol));
        }
        if let Err(e) = &cell.theory_pn {
            diagnostics.push(format!("n = {n}, {label}: no P_n limit, {e}"));
        }
        for (k, variable) in Variable::ALL.into_iter().enumerate() {
            out.push(CellStats {
                n,
                policy: label.clone(),
                variable,
                summary: Summary::of(&cell.samples[k]),
                samples: cell.samples[k].clone(),
                theory_p: theory_p[q].as_ref().ok().map(|t| variable.of(t)),
                theory_pn: cell.theory_pn.as_ref().ok().map(|t| variable.of(t)),
            });
        }
    }
    for (q, t) in theory_p.iter().enumerate() {
        if let Err(e) = t {
            diagnostics.push(format!("{}: no limit under p, {e}", cfg.policies[q].label()));
        }
    }
    Ok(StudyResult {
        cost: cfg.cost,
        runs: cfg.runs,
        sizes: built.iter().map(|b| b.n).collect(),
        policies: cfg.policies.iter().map(PolicySpec::label).collect(),
        cells: out,
        solutions,
        diagnostics,
    })
}

/// Fitted decay of `sd` and `IQR` with `n` for one policy and variable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DispersionTrend {
    pub policy: String,
    pub variable: Variable,
    pub sd: Vec<f64>,
    pub iqr: Vec<f64>,
    pub sd_fit: Option<PowerLawFit>,
    pub iqr_fit: Option<PowerLawFit>,
    /// Adjacent size pairs where the dispersion grew.
    pub sd_inversions: usize,
    pub iqr_inversions: usize,
}

pub fn dispersion_trends(result: &StudyResult) -> Vec<DispersionTrend> {
    let xs: Vec<f64> = result.sizes.iter().map(|&n| n as f64).collect();
    let mut out = Vec::new();
    for policy in &result.policies {
        for variable in Variable::ALL {
            let cells: Vec<&CellStats> =
                result.sizes.iter().filter_map(|&n| result.cell(n, policy, variable)).collect();
            if cells.len() != xs.len() {
                continue;
            }
            let sd: Vec<f64> = cells.iter().map(|c| c.summary.sd).collect();
            let iqr: Vec<f64> = cells.iter().map(|c| c.summary.iqr).collect();
            let inversions = |v: &[f64]| v.windows(2).filter(|w| w[1] > w[0]).count();
            out.push(DispersionTrend {
                policy: policy.clone(),
                variable,
                sd_fit: powerlaw_fit(&xs, &sd).ok(),
                iqr_fit: powerlaw_fit(&xs, &iqr).ok(),
                sd_inversions: inversions(&sd),
                iqr_inversions: inversions(&iqr),
                sd,
                iqr,
            });
        }
    }
    out
}

/// Writes `study.csv`, `dispersion.csv` and two box-plot SVGs per variable.
pub fn write_study(result: &StudyResult, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("study.csv"), result.to_csv())?;

    let mut disp = String::from("policy,variable,sd_slope,iqr_slope,sd_inversions,iqr_inversions\n");
    for t in dispersion_trends(result) {
        let slope = |f: &Option<PowerLawFit>| f.map_or(String::new(), |f| f.slope.to_string());
        let _ = writeln!(
            disp,
            "{},{},{},{},{},{}",
            t.policy,
            t.variable.name(),
            slope(&t.sd_fit),
            slope(&t.iqr_fit),
            t.sd_inversions,
            t.iqr_inversions
        );
    }
    std::fs::write(dir.join("dispersion.csv"), disp)?;

    for variable in Variable::ALL {
        let groups = |shape: &dyn Fn(&CellStats) -> svg::BoxShape| -> Vec<(String, Vec<svg::BoxShape>)> {
            result
                .sizes
                .iter()
                .map(|&n| {
                    let boxes =
                        result.policies.iter().filter_map(|p| result.cell(n, p, variable)).map(shape).collect();
                    (n.to_string(), boxes)
                })
                .collect()
        };
        let quartile = groups(&|c| svg::BoxShape::quartiles(&c.samples, c.summary.q1, c.summary.median, c.summary.q3));
        let mean_sd = groups(&|c| svg::BoxShape::mean_sd(c.summary.mean, c.summary.sd));
        let title = format!("{} by network size", variable.name());
        std::fs::write(
            dir.join(format!("{}_quartiles.svg", variable.slug())),
            svg::box_plot(&format!("{title} (quartiles, 1.5 IQR whiskers)"), variable.name(), &result.policies, &quartile),
        )?;
        std::fs::write(
            dir.join(format!("{}_mean_sd.svg", variable.slug())),
            svg::box_plot(&format!("{title} (mean ± sd)"), variable.name(), &result.policies, &mean_sd),
        )?;
    }
    Ok(())
}
