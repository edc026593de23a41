//! `bench gridworld`.

use clap::Args;
use kpirl_core::gridworld::{run_benchmark, Algorithm, BenchmarkConfig};
use kpirl_core::kpirl::{KpirlConfig, Tolerance};
use serde::{Deserialize, Serialize};

use super::{extension, render};
use crate::error::CliError;
use crate::output::Output;
use crate::GlobalArgs;

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridworldArgs {
    /// Grid side lengths.
    #[arg(long, value_delimiter = ',', default_value = "8")]
    pub sizes: Vec<usize>,
    /// Expert trajectory counts.
    #[arg(long, value_delimiter = ',', default_value = "100")]
    pub trajs: Vec<usize>,
    /// Worlds per cell.
    #[arg(long, default_value_t = 20)]
    pub reps: usize,
    /// Algorithms: pirl, kpirl.
    #[arg(long, value_delimiter = ',', default_value = "pirl,kpirl")]
    pub algos: Vec<String>,
    /// Gaussian bandwidth for kpirl.
    #[arg(long, default_value_t = 0.6)]
    pub bandwidth: f64,
    #[arg(long, default_value_t = 100)]
    pub horizon: usize,
    #[arg(long, default_value_t = 0.9)]
    pub discount: f64,
    #[arg(long, default_value_t = 50)]
    pub max_iterations: usize,
    /// Stopping tolerance as a fraction of the expert's kernel norm.
    #[arg(long, default_value_t = 0.05)]
    pub tolerance: f64,
    /// Also write a gnuplot table.
    #[arg(long)]
    #[serde(default)]
    pub gnuplot: bool,
}

pub fn run(global: &GlobalArgs, args: &GridworldArgs) -> Result<(), CliError> {
    let seed = global.require_seed()?;
    let algorithms =
        args.algos.iter().map(|a| a.parse::<Algorithm>().map_err(CliError::Usage)).collect::<Result<Vec<_>, _>>()?;
    if let Some(&n) = args.sizes.iter().find(|&&n| n < 2) {
        return Err(CliError::Usage(format!("grid size {n} is below 2")));
    }
    let config = BenchmarkConfig {
        algorithms,
        sizes: args.sizes.clone(),
        trajectory_counts: args.trajs.clone(),
        repetitions: args.reps,
        seed,
        bandwidth: args.bandwidth,
        horizon: args.horizon,
        discount: args.discount,
        kpirl: KpirlConfig {
            tolerance: Tolerance::RelativeToExpert(args.tolerance),
            max_iterations: args.max_iterations,
            seed,
        },
    };
    let mut out = Output::create(global, "bench gridworld", args)?;
    let report = run_benchmark(&config).map_err(|e| CliError::Usage(e.to_string()))?;
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.algorithm.to_string(),
                r.n.to_string(),
                r.trajectories.to_string(),
                format!("{:.6}", r.mean_percent_value_lost),
                format!("{:.6}", r.mean_runtime_seconds),
                r.runs.to_string(),
                r.failures.to_string(),
            ]
        })
        .collect();
    let header = ["algorithm", "n", "trajectories", "mean_percent_value_lost", "mean_runtime_s", "runs", "failures"];
    let table = render(&header, &rows, global.format);
    let text = format!("# gamma={} horizon={}\n{table}", report.discount, report.horizon);
    out.write(&format!("report.{}", extension(global.format)), &text)?;
    let runs: Vec<Vec<String>> = report
        .runs
        .iter()
        .map(|r| {
            vec![
                r.algorithm.to_string(),
                r.n.to_string(),
                r.trajectories.to_string(),
                r.repetition.to_string(),
                match &r.percent_value_lost {
                    Ok(v) => format!("{v:.6}"),
                    Err(_) => "NaN".into(),
                },
                r.iterations.to_string(),
                format!("{:.6}", r.runtime_seconds),
                r.percent_value_lost.as_ref().err().cloned().unwrap_or_default().replace([',', '\t', '\n'], " "),
            ]
        })
        .collect();
    let run_header =
        ["algorithm", "n", "trajectories", "repetition", "percent_value_lost", "iterations", "runtime_s", "error"];
    out.write(&format!("runs.{}", extension(global.format)), render(&run_header, &runs, global.format))?;
    if args.gnuplot {
        out.write("report.gnuplot", report.to_gnuplot())?;
    }
    for r in report.runs.iter().filter(|r| r.percent_value_lost.is_err()) {
        log::warn!(
            "{} n={} rep={} failed: {}",
            r.algorithm,
            r.n,
            r.repetition,
            r.percent_value_lost.as_ref().unwrap_err()
        );
    }
    print!("{text}");
    out.finish()
}
