use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bailout_core::contagion::{run_with, write_trace_csv, RunOptions};
use bailout_core::distribution::{empirical_counts, DistributionSpec, JointDistribution};
use bailout_core::experiments::{
    compare_policies, dispersion_trends, run_study, write_comparison, write_study, PolicySpec, StudyConfig,
};
use bailout_core::network::NodePopulation;
use bailout_core::optimizer::{asymptotic_prediction, solve_op};
use bailout_core::rng::run_stream;
use bailout_core::Error;
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

/// Optimal bailouts in random financial networks.
#[derive(Parser)]
#[command(name = "bailout", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the optimisation problem for a degree/equity law and print the solution as JSON.
    Solve {
        /// Distribution JSON, e.g. {"kind": "zipf_copula", ...} or {"kind": "explicit", "entries": [[i, j, c, p], ...]}.
        #[arg(long)]
        distribution: PathBuf,
        /// Cost of one intervention relative to one default.
        #[arg(long)]
        cost: f64,
    },
    /// Simulate one cascade on a network of n nodes.
    Simulate {
        #[arg(long)]
        distribution: PathBuf,
        #[arg(long)]
        n: u64,
        #[arg(long, value_enum, default_value_t = PolicyArg::Optimal)]
        policy: PolicyArg,
        /// Needed by the optimal policy.
        #[arg(long, default_value_t = 0.5)]
        cost: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Lowest and highest helped in-degree for the alternative policy.
        #[arg(long, default_value_t = 8)]
        lo: u32,
        #[arg(long, default_value_t = 10)]
        hi: u32,
        /// Write the per-step trace (k, D, IT, D_minus) to this CSV file.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run a Monte Carlo study across sizes and policies.
    Study {
        /// Study configuration JSON. Without it the reference study is run.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the configuration's output directory.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Compare policies through their limits, optionally with simulated means.
    Compare {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Also simulate the largest size of the configuration.
        #[arg(long)]
        simulate: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    None,
    Complete,
    Optimal,
    Alternative,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Validation(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Validation(format!("{}: {e}", path.display())))
}

fn study_config(path: Option<&Path>, output_dir: Option<PathBuf>) -> Result<StudyConfig, Error> {
    let mut cfg = match path {
        Some(p) => read_json(p)?,
        None => StudyConfig::reference(),
    };
    if output_dir.is_some() {
        cfg.output_dir = output_dir;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("JSON values serialise"));
}

fn execute(command: Command) -> Result<(), Error> {
    match command {
        Command::Solve { distribution, cost } => {
            let p = read_json::<DistributionSpec>(&distribution)?.build()?;
            let sol = solve_op(&p, cost)?;
            let prediction = asymptotic_prediction(&sol).ok();
            let sched = sol.schedule(&p);
            let thresholds: Vec<_> = sched.start.iter().map(|(&(i, j, c), &x)| json!([i, j, c, x])).collect();
            let singular: Vec<_> = sched.singular.iter().map(|(&(i, j), &z)| json!([i, j, z])).collect();
            print(&json!({
                "lambda": p.lambda(),
                "solution": sol,
                "prediction": prediction,
                "thresholds": thresholds,
                "singular": singular,
            }));
        }
        Command::Simulate { distribution, n, policy, cost, seed, lo, hi, trace } => {
            let p = read_json::<DistributionSpec>(&distribution)?.build()?;
            let counts = empirical_counts(&p, n)?;
            let pn = JointDistribution::from_counts(&counts)?;
            let pop = NodePopulation::instantiate(&counts)?;
            let spec = match policy {
                PolicyArg::None => PolicySpec::None,
                PolicyArg::Complete => PolicySpec::Complete,
                PolicyArg::Optimal => PolicySpec::Optimal,
                PolicyArg::Alternative => PolicySpec::Alternative { lo, hi },
            };
            let (policy, _) = spec.instantiate(&pn, cost)?;
            let opts = RunOptions { snapshot_times: Vec::new(), trace: trace.is_some() };
            let out = run_with(&pop, &policy, &mut run_stream(seed, 0, 0), &opts);
            if let Some(path) = trace {
                write_trace_csv(&out.trace, BufWriter::new(File::create(path)?))?;
            }
            print(&json!({
                "policy": spec.label(),
                "n": out.n,
                "m": out.m,
                "steps": out.steps,
                "defaults": out.defaults,
                "initial_defaults": out.initial_defaults,
                "interventions": out.interventions,
                "D/n": out.default_fraction(),
                "IT/n": out.intervention_fraction(),
                "T/m": out.time_fraction(),
                "objective": out.objective(cost),
            }));
        }
        Command::Study { config, output_dir } => {
            let cfg = study_config(config.as_deref(), output_dir)?;
            let result = run_study(&cfg)?;
            if let Some(dir) = &cfg.output_dir {
                write_study(&result, dir)?;
            } else {
                print!("{}", result.to_csv());
            }
            for line in &result.diagnostics {
                eprintln!("warning: {line}");
            }
            for t in dispersion_trends(&result) {
                eprintln!(
                    "{} {}: sd slope {:?}, IQR slope {:?}",
                    t.policy,
                    t.variable.name(),
                    t.sd_fit.map(|f| f.slope),
                    t.iqr_fit.map(|f| f.slope)
                );
            }
        }
        Command::Compare { config, output_dir, simulate } => {
            let cfg = study_config(config.as_deref(), output_dir)?;
            let report = compare_policies(&cfg, simulate)?;
            if let Some(dir) = &cfg.output_dir {
                write_comparison(&report, dir)?;
            } else {
                print!("{}", report.to_csv());
            }
        }
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Validation(_) | Error::Json(_) | Error::Domain(_) => 2,
        Error::Construction(_) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
