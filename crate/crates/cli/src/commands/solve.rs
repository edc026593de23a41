//! `solve dei`: forward RL on the chain, cart-pole or game environments.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use kpirl_core::dei::{run_dei, DeiConfig, DeiEnvironment, DeiOutcome, Exploration, Stepsize};
use kpirl_core::envs::{chain_mdp, chain_reward, CartPole};
use kpirl_core::game::{enumerate_feature_space, phi, Game, GameConfig, GameEnv, GameState};
use kpirl_core::mdp::{policy_value_mc, value_iteration, Environment, Reward, UniformPolicy};
use kpirl_core::treatment::TreatmentFile;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::output::Output;
use crate::GlobalArgs;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvName {
    Chain,
    Cartpole,
    Game,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeiArgs {
    #[arg(long, value_enum, default_value_t = EnvName::Chain)]
    pub env: EnvName,
    #[arg(long, default_value_t = 15)]
    pub iterations: usize,
    #[arg(long, default_value_t = 50)]
    pub episodes: usize,
    /// Episode length; defaults to 20 (chain), 40 (cart-pole), 450 (game).
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub window: usize,
    /// Total environment steps; defaults to iterations × episodes × horizon.
    #[arg(long)]
    pub budget: Option<usize>,
    /// `uniform` or `ucb:<c>`.
    #[arg(long, default_value = "uniform")]
    pub exploration: String,
    /// `harmonic:<a>` or `average`.
    #[arg(long, default_value = "harmonic:10")]
    pub stepsize: String,
    /// Chain length.
    #[arg(long, default_value_t = 5)]
    pub chain_length: usize,
    /// Chain slip probability.
    #[arg(long, default_value_t = 0.1)]
    pub slip: f64,
    /// Discount for the chain and the game.
    #[arg(long)]
    pub discount: Option<f64>,
    /// Game reward from a treatment file instead of the touch indicator.
    #[arg(long)]
    pub treatment: Option<PathBuf>,
    /// Rollouts for the Monte Carlo evaluation.
    #[arg(long, default_value_t = 100)]
    pub eval_episodes: usize,
}

pub fn parse_exploration(s: &str) -> Result<Exploration, CliError> {
    match s.split_once(':') {
        None if s == "uniform" => Ok(Exploration::Uniform),
        Some(("ucb", c)) => match c.parse::<f64>() {
            Ok(c) if c >= 0.0 && c.is_finite() => Ok(Exploration::Ucb { c }),
            _ => Err(CliError::Usage(format!("bad UCB coefficient in `{s}`"))),
        },
        _ => Err(CliError::Usage(format!("unknown exploration `{s}` (uniform or ucb:<c>)"))),
    }
}

pub fn parse_stepsize(s: &str) -> Result<Stepsize, CliError> {
    match s.split_once(':') {
        None if s == "average" => Ok(Stepsize::SampleAverage),
        Some(("harmonic", a)) => match a.parse::<f64>() {
            Ok(a) if a > 0.0 && a.is_finite() => Ok(Stepsize::Harmonic { a }),
            _ => Err(CliError::Usage(format!("bad harmonic constant in `{s}`"))),
        },
        _ => Err(CliError::Usage(format!("unknown stepsize `{s}` (average or harmonic:<a>)"))),
    }
}

#[derive(Debug, Serialize)]
struct Evaluation {
    env: EnvName,
    iterations_completed: usize,
    steps_used: usize,
    truncated: bool,
    mean_return: f64,
    std_error: f64,
    episodes: usize,
    random_mean_return: f64,
    random_std_error: f64,
    /// Exact values where the model is explicit.
    exact_value: Option<f64>,
    optimal_value: Option<f64>,
}

fn config(args: &DeiArgs, horizon: usize) -> Result<DeiConfig, CliError> {
    Ok(DeiConfig {
        iterations: args.iterations,
        episodes: args.episodes,
        horizon,
        window: args.window,
        stepsize: parse_stepsize(&args.stepsize)?,
        exploration: parse_exploration(&args.exploration)?,
        budget: args.budget.unwrap_or(args.iterations * args.episodes * horizon),
    })
}

fn evaluate<E, R>(
    env: &E,
    reward: &R,
    outcome: &DeiOutcome<E>,
    args: &DeiArgs,
    env_name: EnvName,
    seed: u64,
) -> Result<Evaluation, CliError>
where
    E: DeiEnvironment + Sync,
    R: Reward<E::State> + Sync + ?Sized,
{
    let learned =
        policy_value_mc(env, reward, &outcome.policy, args.eval_episodes, seed ^ 0x5EED).map_err(CliError::run)?;
    let random =
        policy_value_mc(env, reward, &UniformPolicy::new(env.num_actions()), args.eval_episodes, seed ^ 0x5EED)
            .map_err(CliError::run)?;
    Ok(Evaluation {
        env: env_name,
        iterations_completed: outcome.iterations_completed,
        steps_used: outcome.steps_used,
        truncated: outcome.truncated,
        mean_return: learned.mean,
        std_error: learned.std_error,
        episodes: learned.episodes,
        random_mean_return: random.mean,
        random_std_error: random.std_error,
        exact_value: None,
        optimal_value: None,
    })
}

fn game_reward(treatment: Option<TreatmentFile>) -> impl Fn(&GameState) -> f64 + Sync {
    let space = enumerate_feature_space();
    move |s: &GameState| match &treatment {
        Some(t) => t.value_of(&space, &phi(s)).unwrap_or(0.0),
        None => f64::from(u8::from(s.touched > 0)),
    }
}

pub fn run(global: &GlobalArgs, args: &DeiArgs) -> Result<(), CliError> {
    let seed = global.require_seed()?;
    if args.treatment.is_some() && args.env != EnvName::Game {
        return Err(CliError::Usage("--treatment applies to --env game only".into()));
    }
    let mut out = Output::create(global, "solve dei", args)?;
    let (evaluation, returns) = match args.env {
        EnvName::Chain => {
            let horizon = args.horizon.unwrap_or(20);
            let mdp = chain_mdp(args.chain_length, args.slip, args.discount.unwrap_or(0.9), horizon)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let rewards = chain_reward(args.chain_length);
            let reward = |s: &usize| rewards[*s];
            let outcome =
                run_dei(&mdp, &reward, &config(args, horizon)?, seed).map_err(|e| CliError::Usage(e.to_string()))?;
            let mut e = evaluate(&mdp, &reward, &outcome, args, args.env, seed)?;
            e.exact_value = Some(mdp.expected_value(&rewards, &outcome.policy).map_err(CliError::run)?);
            e.optimal_value = Some(value_iteration(&mdp, &rewards).map_err(CliError::run)?.expected_value(&mdp));
            (e, outcome.iteration_returns)
        }
        EnvName::Cartpole => {
            let env = CartPole::new(args.horizon.unwrap_or(40));
            let outcome = run_dei(&env, &CartPole::reward, &config(args, env.horizon())?, seed)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            (evaluate(&env, &CartPole::reward, &outcome, args, args.env, seed)?, outcome.iteration_returns)
        }
        EnvName::Game => {
            let treatment = match &args.treatment {
                Some(path) => {
                    let text = out.read_input(path)?;
                    let space = enumerate_feature_space();
                    Some(
                        TreatmentFile::from_json(&text, &space)
                            .map_err(|e| CliError::InvalidInput(format!("{}: {e}", path.display())))?,
                    )
                }
                None => None,
            };
            let game_config = GameConfig { discount: args.discount.unwrap_or(0.95), ..Default::default() };
            let game = Game::new(game_config).map_err(|e| CliError::Usage(e.to_string()))?;
            let env = GameEnv::new(game);
            let env = match args.horizon {
                Some(h) => env.with_horizon(h),
                None => env,
            };
            let reward = game_reward(treatment);
            let outcome = run_dei(&env, &reward, &config(args, env.horizon())?, seed)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            (evaluate(&env, &reward, &outcome, args, args.env, seed)?, outcome.iteration_returns)
        }
    };
    let mut rows = String::from("iteration,mean_episode_reward\n");
    for (i, r) in returns.iter().enumerate() {
        rows.push_str(&format!("{},{r}\n", i + 1));
    }
    out.write("iterations.csv", rows)?;
    out.write("evaluation.json", serde_json::to_string_pretty(&evaluation).map_err(CliError::run)? + "\n")?;
    println!(
        "dei return {:.4} ± {:.4} random {:.4} ± {:.4}{}",
        evaluation.mean_return,
        evaluation.std_error,
        evaluation.random_mean_return,
        evaluation.random_std_error,
        match (evaluation.exact_value, evaluation.optimal_value) {
            (Some(v), Some(o)) => format!(" exact {v:.6} optimal {o:.6}"),
            _ => String::new(),
        }
    );
    out.finish()
}
