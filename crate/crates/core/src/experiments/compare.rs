//! Side-by-side asymptotic and simulated costs of several policies.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::{run_study, svg, PolicySpec, StudyConfig, Variable};
use crate::error::{validation, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub policy: String,
    /// Limiting default fraction with no intervention at all.
    pub baseline_defaults: f64,
    pub defaults: f64,
    pub interventions: f64,
    /// `J − J̃`: defaults the policy prevents.
    pub prevented: f64,
    /// `K · it`.
    pub cost: f64,
    pub objective: f64,
    /// Objective minus the first policy's objective.
    pub gap: f64,
    /// Simulated means of `D/n` and `IT/n` at the largest size, when simulated.
    pub empirical_defaults: Option<f64>,
    pub empirical_interventions: Option<f64>,
    pub empirical_objective: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub cost: f64,
    /// Size the empirical columns come from.
    pub n: Option<u64>,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonReport {
    pub fn row(&self, policy: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.policy == policy)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "policy,baseline_defaults,defaults,interventions,prevented,cost,objective,gap,\
             empirical_defaults,empirical_interventions,empirical_objective\n",
        );
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.policy,
                r.baseline_defaults,
                r.defaults,
                r.interventions,
                r.prevented,
                r.cost,
                r.objective,
                r.gap,
                opt(r.empirical_defaults),
                opt(r.empirical_interventions),
                opt(r.empirical_objective)
            );
        }
        out
    }

    pub fn to_svg(&self) -> String {
        let series = vec!["defaults prevented".to_string(), "intervention cost".to_string(), "objective".to_string()];
        let groups: Vec<(String, Vec<f64>)> =
            self.rows.iter().map(|r| (r.policy.clone(), vec![r.prevented, r.cost, r.objective])).collect();
        svg::bar_chart(&format!("Policy comparison, K = {}", self.cost), "fraction of nodes", &series, &groups)
    }
}

/// Compares the policies of `cfg` through their large-network limits. With
/// `simulate` set, the largest size of `cfg` is also simulated `cfg.runs`
/// times per policy.
pub fn compare_policies(cfg: &StudyConfig, simulate: bool) -> Result<ComparisonReport> {
    if cfg.policies.len() < 2 {
        return Err(validation("comparison needs at least two policies"));
    }
    let p = cfg.distribution.build()?;
    let baseline = PolicySpec::None.theory(&p, cfg.cost)?.defaults;

    let empirical = if simulate {
        cfg.validate()?;
        let largest = *cfg.sizes.last().expect("validated");
        let sub = StudyConfig { sizes: vec![largest], ..cfg.clone() };
        Some((largest, run_study(&sub)?))
    } else {
        None
    };

    let mut rows: Vec<ComparisonRow> = Vec::with_capacity(cfg.policies.len());
    for spec in &cfg.policies {
        let label = spec.label();
        let pred = spec.theory(&p, cfg.cost)?;
        let objective = cfg.cost * pred.interventions + pred.defaults;
        let mean = |v: Variable| {
            empirical.as_ref().and_then(|(n, res)| res.cell(*n, &label, v)).map(|c| c.summary.mean)
        };
        let (ed, ei) = (mean(Variable::Defaults), mean(Variable::Interventions));
        rows.push(ComparisonRow {
            baseline_defaults: baseline,
            defaults: pred.defaults,
            interventions: pred.interventions,
            prevented: baseline - pred.defaults,
            cost: cfg.cost * pred.interventions,
            objective,
            gap: rows.first().map_or(0.0, |first| objective - first.objective),
            empirical_defaults: ed,
            empirical_interventions: ei,
            empirical_objective: ed.zip(ei).map(|(d, i)| d + cfg.cost * i),
            policy: label,
        });
    }
    Ok(ComparisonReport { cost: cfg.cost, n: empirical.map(|(n, _)| n), rows })
}

/// Writes `comparison.csv` and `comparison.svg`.
pub fn write_comparison(report: &ComparisonReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("comparison.csv"), report.to_csv())?;
    std::fs::write(dir.join("comparison.svg"), report.to_svg())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::DistributionSpec;

    fn quadratic(cost: f64, policies: Vec<PolicySpec>) -> StudyConfig {
        StudyConfig {
            distribution: DistributionSpec::Explicit { entries: vec![(2, 2, 0, 0.2), (2, 2, 2, 0.8)] },
            sizes: vec![200],
            runs: 4,
            policies,
            cost,
            seed: 3,
            output_dir: None,
        }
    }

    #[test]
    fn identical_policies_have_zero_gap() {
        let r = compare_policies(&quadratic(0.5, vec![PolicySpec::Complete, PolicySpec::Complete]), false).unwrap();
        assert_eq!(r.rows[1].gap, 0.0);
        assert_eq!(r.rows[0], r.rows[1]);
    }

    #[test]
    fn optimal_beats_none() {
        let r = compare_policies(&quadratic(0.5, vec![PolicySpec::Optimal, PolicySpec::None]), true).unwrap();
        let (opt, none) = (&r.rows[0], &r.rows[1]);
        assert!((opt.objective - 0.216).abs() < 1e-9);
        assert!((none.objective - 0.25).abs() < 1e-9);
        assert!(none.gap > 0.0);
        assert_eq!(none.prevented, 0.0);
        assert!(opt.empirical_objective.is_some());
        assert_eq!(r.n, Some(200));
    }

    #[test]
    fn single_policy_rejected() {
        assert!(compare_policies(&quadratic(0.5, vec![PolicySpec::None]), false).is_err());
    }
}
