//! Discounted MDPs as generative models.
//!
//! An [`Environment`] supplies the initial-state sampler, the transition
//! sampler, the discount and the horizon. Rewards are kept separate (see
//! [`Reward`]) because inverse RL swaps the reward on a fixed set of dynamics
//! many times; an environment together with a reward is a discounted MDP.
//!
//! Every stochastic routine takes an explicit seed. Episode `e` of a run with
//! seed `s` draws from its own ChaCha stream `(s, e)`, so episodes can be
//! generated in any order, or in parallel, with identical results.

mod policy;
pub mod tabular;
mod trajectory;

pub use policy::{
    sample_categorical, sample_mixed, DecisionRule, DeterministicPolicy, MarkovPolicy, MixedPolicy, Policy,
    TabularPolicy, UniformPolicy,
};
pub use tabular::{value_iteration, Horizon, Solution, TabularMdp};
pub use trajectory::{read_trajectory, write_trajectory, Source, StateCodec, Trajectory};

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

pub type Result<T, E = MdpError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum MdpError {
    #[error("environment fault: {0}")]
    EnvironmentFault(String),
    #[error("unsupported model: {0}")]
    Unsupported(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("malformed trajectory at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Generative dynamics of a discounted MDP.
pub trait Environment {
    type State: Clone;

    fn num_actions(&self) -> usize;

    /// Number of ticks in an episode (T).
    fn horizon(&self) -> usize;

    fn discount(&self) -> f64;

    /// Wall-clock length of one tick, in seconds.
    fn tick_period(&self) -> f64 {
        1.0
    }

    fn sample_initial(&self, rng: &mut dyn RngCore) -> Result<Self::State>;

    fn sample_next(&self, state: &Self::State, action: usize, rng: &mut dyn RngCore) -> Result<Self::State>;

    /// The explicit model, when there is one. Exact solvers require it.
    fn as_tabular(&self) -> Option<&TabularMdp> {
        None
    }
}

/// State reward `R: S -> ℝ`.
pub trait Reward<S: ?Sized> {
    fn reward(&self, state: &S) -> f64;
}

impl<S: ?Sized, F: Fn(&S) -> f64> Reward<S> for F {
    fn reward(&self, state: &S) -> f64 {
        self(state)
    }
}

/// RNG stream for one episode of a seeded run.
pub fn episode_rng(seed: u64, episode: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(episode);
    rng
}

/// Rolls out one episode of exactly `horizon()` (state, action) pairs.
///
/// An action is selected in every visited state, the last one included.
pub fn rollout<E, P>(env: &E, policy: &P, seed: u64) -> Result<Trajectory<E::State>>
where
    E: Environment,
    P: Policy<E::State> + ?Sized,
{
    rollout_episode(env, policy, seed, 0)
}

pub fn rollout_episode<E, P>(env: &E, policy: &P, seed: u64, episode: u64) -> Result<Trajectory<E::State>>
where
    E: Environment,
    P: Policy<E::State> + ?Sized,
{
    let mut rng = episode_rng(seed, episode);
    run_episode(env, policy, &mut rng, seed)
}

/// Samples the base policy once, then follows it for the whole episode.
pub fn rollout_mixed<E, P>(env: &E, mixed: &MixedPolicy<P>, seed: u64, episode: u64) -> Result<Trajectory<E::State>>
where
    E: Environment,
    P: Policy<E::State>,
{
    let mut rng = episode_rng(seed, episode);
    let base = mixed.sample(&mut rng)?;
    run_episode(env, base, &mut rng, seed)
}

fn run_episode<E, P>(env: &E, policy: &P, rng: &mut dyn RngCore, seed: u64) -> Result<Trajectory<E::State>>
where
    E: Environment,
    P: Policy<E::State> + ?Sized,
{
    let horizon = env.horizon();
    if horizon == 0 {
        return Err(MdpError::InvalidArgument("horizon must be at least 1".into()));
    }
    let num_actions = env.num_actions();
    let mut steps = Vec::with_capacity(horizon);
    let mut state = env.sample_initial(rng)?;
    for tick in 0..horizon {
        let action = policy.sample_action(&state, tick, rng);
        if action >= num_actions {
            return Err(MdpError::EnvironmentFault(format!("policy chose action {action} of {num_actions}")));
        }
        let next = if tick + 1 < horizon { Some(env.sample_next(&state, action, rng)?) } else { None };
        steps.push((state, action));
        match next {
            Some(s) => state = s,
            None => break,
        }
    }
    Ok(Trajectory::new(steps, env.tick_period(), seed, Source::Simulated))
}

/// Discounted return `Σ γ^t R(s_t)` of a trajectory.
pub fn discounted_return<S, R: Reward<S> + ?Sized>(trajectory: &Trajectory<S>, reward: &R, discount: f64) -> f64 {
    let mut total = 0.0;
    let mut weight = 1.0;
    for (state, _) in trajectory.steps() {
        total += weight * reward.reward(state);
        weight *= discount;
    }
    total
}

/// Monte Carlo value estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub episodes: usize,
}

impl McEstimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let std_error = if n > 1 {
            let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        McEstimate { mean, std_error, episodes: n }
    }
}

/// Estimates `E_d^π[Σ_t γ^{t-1} R(X_t)]` from `episodes` seeded rollouts.
pub fn policy_value_mc<E, P, R>(env: &E, reward: &R, policy: &P, episodes: usize, seed: u64) -> Result<McEstimate>
where
    E: Environment + Sync,
    P: Policy<E::State> + Sync + ?Sized,
    R: Reward<E::State> + Sync + ?Sized,
{
    if episodes == 0 {
        return Err(MdpError::InvalidArgument("episodes must be at least 1".into()));
    }
    let gamma = env.discount();
    let returns = (0..episodes as u64)
        .into_par_iter()
        .map(|e| rollout_episode(env, policy, seed, e).map(|t| discounted_return(&t, reward, gamma)))
        .collect::<Result<Vec<_>>>()?;
    Ok(McEstimate::from_samples(&returns))
}
