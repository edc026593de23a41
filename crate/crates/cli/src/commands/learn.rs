//! `learn kpirl`: kernel projection IRL on recorded game trajectories with a
//! DEI sub-solver.

use std::path::{Path, PathBuf};

use clap::Args;
use kpirl_core::dei::{DeiConfig, Stepsize};
use kpirl_core::features::{estimate_mu, gram_matrix, ExpectationForm, KernelKind};
use kpirl_core::game::{enumerate_feature_space, Game, GameConfig, GameEnv, GameFeatureMap, GameState};
use kpirl_core::kpirl::{run_kpirl, select_iteration, write_run_archive, KpirlConfig, Tolerance};
use kpirl_core::mdp::{read_trajectory, Trajectory};
use kpirl_core::sampled::SampledSolver;
use serde::{Deserialize, Serialize};

use super::solve::parse_exploration;
use crate::error::CliError;
use crate::output::Output;
use crate::GlobalArgs;

/// Learned reward `α` together with what it was learned against.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RewardFile {
    pub kernel: String,
    pub space_hash: String,
    /// 1-based KPIRL iteration the reward came from.
    pub iteration: usize,
    pub distance: f64,
    pub alpha: Vec<f64>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KpirlArgs {
    /// Expert trajectory files or directories: trajectory text, or the JSON
    /// array served by the export endpoint.
    #[arg(long, alias = "expert", value_delimiter = ',')]
    #[serde(default)]
    pub experts: Vec<PathBuf>,
    /// `dot`, `gaussian:<σ>` or `game:<σ>`.
    #[arg(long, default_value = "game:0.6")]
    pub kernel: String,
    #[arg(long, default_value_t = 50)]
    pub max_iterations: usize,
    /// Stopping tolerance as a fraction of the expert's kernel norm.
    #[arg(long, default_value_t = 0.05)]
    pub tolerance: f64,
    /// Absolute stopping tolerance; overrides `--tolerance`.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, default_value_t = 0.95)]
    pub discount: f64,
    /// Truncates episodes (experts included) to this many ticks.
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long, default_value_t = 4)]
    pub dei_iterations: usize,
    #[arg(long, default_value_t = 16)]
    pub dei_episodes: usize,
    #[arg(long, default_value_t = 15)]
    pub window: usize,
    /// `uniform` or `ucb:<c>`.
    #[arg(long, default_value = "uniform")]
    pub exploration: String,
    /// Rollouts used to estimate each solved policy's expectation.
    #[arg(long, default_value_t = 32)]
    pub eval_episodes: usize,
}

fn collect_paths(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut entries = std::fs::read_dir(input)
                .map_err(|e| CliError::io(input, e))?
                .map(|e| e.map(|e| e.path()).map_err(|err| CliError::io(input, err)))
                .collect::<Result<Vec<_>, _>>()?;
            entries.retain(|p| p.is_file() && p.file_name().is_some_and(|n| !n.to_string_lossy().starts_with('.')));
            entries.sort();
            files.extend(entries);
        } else if input.exists() {
            files.push(input.clone());
        } else {
            return Err(CliError::MissingInput(format!("expert trajectory path {} does not exist", input.display())));
        }
    }
    Ok(files)
}

fn parse_experts(path: &Path, text: &str) -> Result<Vec<Trajectory<GameState>>, CliError> {
    let bad = |e: String| CliError::InvalidInput(format!("{}: {e}", path.display()));
    if path.extension().is_some_and(|e| e == "json") {
        #[derive(Deserialize)]
        struct Item {
            trajectory: String,
        }
        let items: Vec<Item> = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        items.iter().map(|i| read_trajectory(i.trajectory.as_bytes()).map_err(|e| bad(e.to_string()))).collect()
    } else {
        Ok(vec![read_trajectory(text.as_bytes()).map_err(|e| bad(e.to_string()))?])
    }
}

pub fn run(global: &GlobalArgs, args: &KpirlArgs) -> Result<(), CliError> {
    if args.experts.is_empty() {
        return Err(CliError::MissingInput("no expert trajectories given (--experts)".into()));
    }
    let seed = global.require_seed()?;
    let kind: KernelKind = args.kernel.parse().map_err(|e| CliError::Usage(format!("{e}")))?;
    let exploration = parse_exploration(&args.exploration)?;
    let mut out = Output::create(global, "learn kpirl", args)?;

    let mut experts = Vec::new();
    for path in collect_paths(&args.experts)? {
        let text = out.read_input(&path)?;
        experts.extend(parse_experts(&path, &text)?);
    }
    experts.retain(|t| !t.is_empty());
    if experts.is_empty() {
        return Err(CliError::MissingInput("the expert inputs hold no trajectories".into()));
    }
    let first = experts[0].steps()[0].0.clone();
    let config = GameConfig { width: first.w, height: first.h, discount: args.discount, ..Default::default() };
    let game = Game::new(config).map_err(|e| CliError::InvalidInput(e.to_string()))?;
    let shortest = experts.iter().map(Trajectory::len).min().unwrap_or(0);
    let horizon = args.horizon.unwrap_or(game.config().horizon()).min(shortest);
    let experts: Vec<Trajectory<GameState>> = experts
        .into_iter()
        .map(|t| {
            let (period, seed, source) = (t.tick_period(), t.seed(), t.source());
            let mut steps = t.into_steps();
            steps.truncate(horizon);
            Trajectory::new(steps, period, seed, source)
        })
        .collect();
    log::info!("{} expert trajectories of {horizon} ticks", experts.len());

    let space = enumerate_feature_space();
    let kernel = gram_matrix(kind, &space).map_err(CliError::run)?;
    let mu_expert = estimate_mu(&experts, args.discount, ExpectationForm::Visitation, &space, &GameFeatureMap)
        .map_err(|e| CliError::InvalidInput(e.to_string()))?
        .values;
    let starts = experts.iter().map(|t| t.steps()[0].0.clone()).collect();
    let env = GameEnv::new(game).with_starts(starts).map_err(CliError::run)?.with_horizon(horizon);
    let dei = DeiConfig {
        iterations: args.dei_iterations,
        episodes: args.dei_episodes,
        horizon,
        window: args.window,
        stepsize: Stepsize::default(),
        exploration,
        budget: args.dei_iterations * args.dei_episodes * horizon,
    };
    let mut solver = SampledSolver::new(env, &GameFeatureMap, &space, dei, args.eval_episodes, seed);
    let config = KpirlConfig {
        tolerance: args.eps.map_or(Tolerance::RelativeToExpert(args.tolerance), Tolerance::Absolute),
        max_iterations: args.max_iterations,
        seed,
    };
    let run = run_kpirl(&mu_expert, &kernel, &mut solver, &config).map_err(CliError::run)?;
    let best = select_iteration(&run, &mu_expert, &kernel).map_err(CliError::run)?;
    let record = &run.iterations[best];
    let reward = RewardFile {
        kernel: kind.to_string(),
        space_hash: space.hash(),
        iteration: best + 1,
        distance: kernel.norm(&(&mu_expert - &record.mu)).map_err(CliError::run)?,
        alpha: record.reward.alpha().iter().copied().collect(),
    };
    out.write("reward.json", serde_json::to_string_pretty(&reward).map_err(CliError::run)? + "\n")?;
    out.write("run.archive", write_run_archive(&run))?;
    let mut rows = String::from("iteration,distance,kappa_raw,kappa,weight\n");
    for (i, (r, w)) in run.iterations.iter().zip(&run.weights).enumerate() {
        let (raw, kappa) =
            r.projection.map_or((String::new(), String::new()), |p| (p.kappa_raw.to_string(), p.kappa.to_string()));
        rows.push_str(&format!("{},{},{raw},{kappa},{w}\n", i + 1, r.distance));
    }
    out.write("iterations.csv", rows)?;
    println!(
        "iterations {} converged {} final distance {:.6} epsilon {:.6} selected iteration {}",
        run.iterations.len(),
        run.converged,
        run.final_distance(),
        run.epsilon,
        best + 1
    );
    out.finish()
}
