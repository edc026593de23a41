//! `kpirl`: benchmark sweeps, reward learning, forward solving, treatment
//! export, game simulation and the experiment service behind one binary.
//!
//! Every subcommand writes its artifacts under `--out` together with a
//! `manifest.json` naming the inputs, seeds and versions that produced them.
//! Values from a `--config` TOML file override flags.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::commands::{bench, export, learn, serve, simulate, solve};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "kpirl", version, about = "Kernel projection IRL toolkit")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Csv,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlobalArgs {
    /// TOML file whose values override flags.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Seed for every stochastic step.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    #[serde(default)]
    pub verbose: u8,
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Worker threads; defaults to the number of logical cores.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

impl GlobalArgs {
    pub fn require_seed(&self) -> Result<u64, CliError> {
        self.seed.ok_or_else(|| CliError::Usage("--seed is required for this subcommand".into()))
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Benchmark sweeps.
    #[command(subcommand)]
    Bench(BenchCommand),
    /// Reward learning from expert trajectories.
    #[command(subcommand)]
    Learn(LearnCommand),
    /// Forward reinforcement learning.
    #[command(subcommand)]
    Solve(SolveCommand),
    /// Artifact export.
    #[command(subcommand)]
    Export(ExportCommand),
    /// Simulation.
    #[command(subcommand)]
    Simulate(SimulateCommand),
    /// Runs the experiment service.
    Serve(serve::ServeArgs),
}

#[derive(Debug, Subcommand)]
enum BenchCommand {
    /// Percent-value-lost sweep on random gridworlds.
    Gridworld(bench::GridworldArgs),
}

#[derive(Debug, Subcommand)]
enum LearnCommand {
    /// Kernel projection IRL on game trajectories.
    Kpirl(learn::KpirlArgs),
}

#[derive(Debug, Subcommand)]
enum SolveCommand {
    /// Direct expectation iteration.
    Dei(solve::DeiArgs),
}

#[derive(Debug, Subcommand)]
enum ExportCommand {
    /// Treatment file for the service and game client.
    Treatment(export::TreatmentArgs),
}

#[derive(Debug, Subcommand)]
enum SimulateCommand {
    /// Seeded games under a scripted policy.
    Game(simulate::GameArgs),
}

fn configure_threads(jobs: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = jobs {
        if n == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Run(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = cli.global.config.as_deref().map(config::load).transpose()?;
    let file = file.as_ref();
    let global = config::merge_global(&cli.global, file)?;
    env_logger::Builder::new()
        .filter_level(match global.verbose {
            0 => log::LevelFilter::Warn,
            1 => log::LevelFilter::Info,
            _ => log::LevelFilter::Debug,
        })
        .init();
    configure_threads(global.jobs)?;
    match cli.command {
        Command::Bench(BenchCommand::Gridworld(a)) => {
            bench::run(&global, &config::merge(&a, file, &["bench", "gridworld"])?)
        }
        Command::Learn(LearnCommand::Kpirl(a)) => learn::run(&global, &config::merge(&a, file, &["learn", "kpirl"])?),
        Command::Solve(SolveCommand::Dei(a)) => solve::run(&global, &config::merge(&a, file, &["solve", "dei"])?),
        Command::Export(ExportCommand::Treatment(a)) => {
            export::run(&global, &config::merge(&a, file, &["export", "treatment"])?)
        }
        Command::Simulate(SimulateCommand::Game(a)) => {
            simulate::run(&global, &config::merge(&a, file, &["simulate", "game"])?)
        }
        Command::Serve(a) => serve::run(&global, &config::merge(&a, file, &["serve"])?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.line());
            ExitCode::from(e.exit_code())
        }
    }
}
