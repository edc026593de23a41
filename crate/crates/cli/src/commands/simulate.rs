//! `simulate game`: seeded games under a scripted policy.

use clap::{Args, ValueEnum};
use kpirl_core::game::{ChasePolicy, Game, GameConfig, GameState, NUM_ACTIONS, ZERO_ACTION};
use kpirl_core::mdp::{rollout_episode, write_trajectory, Policy, Trajectory, UniformPolicy};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{extension, mean_sd, render};
use crate::error::CliError;
use crate::output::Output;
use crate::GlobalArgs;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScriptedPolicy {
    /// Uniform over the action grid.
    Random,
    /// Always the zero-velocity action.
    Zero,
    /// Steers toward the nearest live target.
    Chase,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameArgs {
    #[arg(long, value_enum, default_value_t = ScriptedPolicy::Random)]
    pub policy: ScriptedPolicy,
    #[arg(long, default_value_t = 10)]
    pub games: usize,
    #[arg(long, default_value_t = 1280.0)]
    pub width: f64,
    #[arg(long, default_value_t = 720.0)]
    pub height: f64,
    /// Skip writing per-game trajectory files.
    #[arg(long)]
    #[serde(default)]
    pub no_trajectories: bool,
}

/// Policy that always plays one action, for any state type.
struct Constant(usize);

impl Policy<GameState> for Constant {
    fn num_actions(&self) -> usize {
        NUM_ACTIONS
    }

    fn action_probabilities(&self, _: &GameState, _: usize) -> Vec<f64> {
        let mut p = vec![0.0; NUM_ACTIONS];
        p[self.0] = 1.0;
        p
    }
}

pub fn run(global: &GlobalArgs, args: &GameArgs) -> Result<(), CliError> {
    let seed = global.require_seed()?;
    if args.games == 0 {
        return Err(CliError::Usage("--games must be at least 1".into()));
    }
    let config = GameConfig { width: args.width, height: args.height, ..Default::default() };
    let game = Game::new(config).map_err(|e| CliError::Usage(e.to_string()))?;
    let policy: Box<dyn Policy<GameState> + Sync> = match args.policy {
        ScriptedPolicy::Random => Box::new(UniformPolicy::new(NUM_ACTIONS)),
        ScriptedPolicy::Zero => Box::new(Constant(ZERO_ACTION)),
        ScriptedPolicy::Chase => Box::new(ChasePolicy::new(game.clone())),
    };
    let mut out = Output::create(global, "simulate game", args)?;
    let trajectories: Vec<Trajectory<GameState>> = (0..args.games as u64)
        .into_par_iter()
        .map(|m| rollout_episode(&game, &policy, seed, m))
        .collect::<Result<_, _>>()
        .map_err(CliError::run)?;
    let mut rows = Vec::new();
    let mut touches = Vec::new();
    for (m, t) in trajectories.iter().enumerate() {
        let total: u32 = t.states().skip(1).map(|s| s.touched).sum();
        touches.push(f64::from(total));
        rows.push(vec![m.to_string(), total.to_string()]);
        if !args.no_trajectories {
            let mut text = Vec::new();
            write_trajectory(&mut text, t).map_err(CliError::run)?;
            out.write(&format!("trajectories/game-{m:04}.traj"), text)?;
        }
    }
    out.write(&format!("touches.{}", extension(global.format)), render(&["game", "touches"], &rows, global.format))?;
    let (mean, sd) = mean_sd(&touches);
    println!("{} games, touches per game mean {mean:.3} sd {sd:.3}", args.games);
    out.finish()
}
