//! Direct estimate iteration.
//!
//! Generalized policy iteration driven by windowed average-reward
//! estimates: each iteration rolls out `M` episodes of `T` steps, turns every
//! length-`W` window inside an episode into an observation `(key, v̂)`, fits a
//! tabular Q estimate over all observations so far and acts greedily on it.
//! Keys come from the environment, which lets the game use post-decision
//! states instead of raw `(state, action)` pairs.

use std::collections::HashMap;
use std::hash::Hash;

use rand::{Rng, RngCore};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::mdp::{episode_rng, Environment, MdpError, Policy, Reward, TabularMdp};

pub type Result<T, E = DeiError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum DeiError {
    #[error(transparent)]
    Mdp(#[from] MdpError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// An environment whose Q function is keyed by a discrete value.
pub trait DeiEnvironment: Environment {
    type Key: Clone + Eq + Hash + Send + Sync + std::fmt::Debug;

    /// Key under which the value of taking `action` in `state` is stored.
    fn q_key(&self, state: &Self::State, action: usize) -> Self::Key;
}

impl DeiEnvironment for TabularMdp {
    type Key = (usize, usize);

    fn q_key(&self, state: &usize, action: usize) -> (usize, usize) {
        (*state, action)
    }
}

/// Mixing weight for the `n`-th observation of a key.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stepsize {
    /// `1/n`: the plain running mean.
    SampleAverage,
    /// `a / (a + n - 1)`.
    Harmonic { a: f64 },
}

impl Stepsize {
    pub fn weight(&self, n: u64) -> f64 {
        match *self {
            Stepsize::SampleAverage => 1.0 / n as f64,
            Stepsize::Harmonic { a } => a / (a + n as f64 - 1.0),
        }
    }
}

impl Default for Stepsize {
    fn default() -> Self {
        Stepsize::Harmonic { a: 10.0 }
    }
}

/// How the first action of each episode is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exploration {
    Uniform,
    Ucb { c: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeiConfig {
    pub iterations: usize,
    pub episodes: usize,
    pub horizon: usize,
    pub window: usize,
    pub stepsize: Stepsize,
    pub exploration: Exploration,
    /// Total environment steps allowed across all iterations.
    pub budget: usize,
}

impl DeiConfig {
    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(DeiError::InvalidArgument(m.into()));
        if self.iterations == 0 || self.episodes == 0 {
            return bad("iterations and episodes must be at least 1");
        }
        if self.window == 0 || self.window > self.horizon {
            return bad("window must satisfy 1 <= W <= T");
        }
        if self.budget < self.episodes * self.horizon {
            return bad("budget is smaller than one iteration (M·T)");
        }
        if let Exploration::Ucb { c } = self.exploration {
            if !(c >= 0.0) {
                return bad("UCB coefficient must be non-negative");
            }
        }
        Ok(())
    }
}

/// Averages of every length-`window` slice of `rewards`.
pub fn windowed_returns(rewards: &[f64], window: usize) -> Result<Vec<f64>> {
    if window == 0 || window > rewards.len() {
        return Err(DeiError::InvalidArgument(format!("window {window} does not fit {} rewards", rewards.len())));
    }
    Ok(rewards.windows(window).map(|w| w.iter().sum::<f64>() / window as f64).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KeyStats {
    pub mean: f64,
    pub variance: f64,
    pub count: u64,
}

impl KeyStats {
    pub fn std(&self) -> f64 {
        self.variance.max(0.0).sqrt()
    }
}

/// Tabular Q estimate with a global-mean fallback for unseen keys.
#[derive(Debug, Clone)]
pub struct QEstimate<K> {
    table: HashMap<K, KeyStats>,
    global_mean: f64,
    observations: usize,
}

impl<K: Eq + Hash> QEstimate<K> {
    pub fn empty() -> Self {
        QEstimate { table: HashMap::new(), global_mean: 0.0, observations: 0 }
    }

    pub fn value(&self, key: &K) -> f64 {
        self.table.get(key).map_or(self.global_mean, |s| s.mean)
    }

    pub fn stats(&self, key: &K) -> Option<&KeyStats> {
        self.table.get(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, &KeyStats)> {
        self.table.iter()
    }

    pub fn global_mean(&self) -> f64 {
        self.global_mean
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn observations(&self) -> usize {
        self.observations
    }
}

/// Folds observations, in order, into per-key running statistics.
pub fn fit_q<K: Clone + Eq + Hash>(observations: &[(K, f64)], stepsize: Stepsize) -> QEstimate<K> {
    let mut table: HashMap<K, KeyStats> = HashMap::new();
    let mut total = 0.0;
    for (key, x) in observations {
        total += x;
        let s = table.entry(key.clone()).or_default();
        s.count += 1;
        let alpha = stepsize.weight(s.count).min(1.0);
        let delta = x - s.mean;
        s.mean += alpha * delta;
        s.variance = (1.0 - alpha) * (s.variance + alpha * delta * delta);
    }
    let global_mean = if observations.is_empty() { 0.0 } else { total / observations.len() as f64 };
    QEstimate { table, global_mean, observations: observations.len() }
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.into_iter().enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

/// `argmax_a mean_a + c·std_a/√count_a`. With `c > 0` unvisited actions
/// come first; with `c = 0` the rule is plain greedy on the means.
pub fn ucb_select(means: &[f64], stds: &[f64], counts: &[u64], c: f64) -> usize {
    argmax((0..means.len()).map(|a| {
        if c == 0.0 {
            means[a]
        } else if counts[a] == 0 {
            f64::INFINITY
        } else {
            means[a] + c * stds[a] / (counts[a] as f64).sqrt()
        }
    }))
}

/// UCB choice of the first action in `state`. `pending` counts selections
/// already made in the current iteration; they count as visits.
pub fn ucb_initial_action<E: DeiEnvironment>(
    env: &E,
    q: &QEstimate<E::Key>,
    state: &E::State,
    pending: &HashMap<E::Key, u64>,
    c: f64,
) -> usize {
    let n = env.num_actions();
    let mut means = Vec::with_capacity(n);
    let mut stds = Vec::with_capacity(n);
    let mut counts = Vec::with_capacity(n);
    for a in 0..n {
        let key = env.q_key(state, a);
        let stats = q.stats(&key).copied();
        means.push(stats.map_or(q.global_mean(), |s| s.mean));
        stds.push(stats.map_or(0.0, |s| s.std()));
        counts.push(stats.map_or(0, |s| s.count) + pending.get(&key).copied().unwrap_or(0));
    }
    ucb_select(&means, &stds, &counts, c)
}

/// Deterministic greedy policy over a Q estimate.
#[derive(Debug, Clone)]
pub struct GreedyQPolicy<E: DeiEnvironment> {
    env: E,
    q: QEstimate<E::Key>,
}

impl<E: DeiEnvironment> GreedyQPolicy<E> {
    pub fn new(env: E, q: QEstimate<E::Key>) -> Self {
        GreedyQPolicy { env, q }
    }

    pub fn q(&self) -> &QEstimate<E::Key> {
        &self.q
    }

    pub fn action(&self, state: &E::State) -> usize {
        greedy_action(&self.env, &self.q, state)
    }
}

pub fn greedy_action<E: DeiEnvironment>(env: &E, q: &QEstimate<E::Key>, state: &E::State) -> usize {
    argmax((0..env.num_actions()).map(|a| q.value(&env.q_key(state, a))))
}

impl<E: DeiEnvironment> Policy<E::State> for GreedyQPolicy<E> {
    fn num_actions(&self) -> usize {
        self.env.num_actions()
    }

    fn action_probabilities(&self, state: &E::State, _: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.env.num_actions()];
        p[self.action(state)] = 1.0;
        p
    }

    fn sample_action(&self, state: &E::State, _: usize, _: &mut dyn RngCore) -> usize {
        self.action(state)
    }
}

#[derive(Debug, Clone)]
pub struct DeiOutcome<E: DeiEnvironment> {
    pub policy: GreedyQPolicy<E>,
    /// Mean undiscounted episode reward of each completed iteration.
    pub iteration_returns: Vec<f64>,
    pub iterations_completed: usize,
    pub steps_used: usize,
    /// Set when the budget ran out before all iterations finished.
    pub truncated: bool,
}

struct Episode<K> {
    observations: Vec<(K, f64)>,
    total_reward: f64,
}

fn run_episode<E, R>(
    env: &E,
    reward: &R,
    q: Option<&QEstimate<E::Key>>,
    start: E::State,
    first_action: usize,
    rng: &mut ChaCha8Rng,
    config: &DeiConfig,
) -> Result<Episode<E::Key>>
where
    E: DeiEnvironment,
    R: Reward<E::State> + ?Sized,
{
    let mut keys = Vec::with_capacity(config.horizon);
    let mut rewards = Vec::with_capacity(config.horizon);
    let mut state = start;
    for t in 0..config.horizon {
        let action = if t == 0 {
            first_action
        } else {
            match q {
                Some(q) => greedy_action(env, q, &state),
                None => rng.gen_range(0..env.num_actions()),
            }
        };
        keys.push(env.q_key(&state, action));
        state = env.sample_next(&state, action, rng)?;
        rewards.push(reward.reward(&state));
    }
    let estimates = windowed_returns(&rewards, config.window)?;
    let observations = keys.into_iter().zip(estimates).collect();
    Ok(Episode { observations, total_reward: rewards.iter().sum() })
}

/// Runs DEI; `on_iteration` sees the Q estimate fitted after each iteration.
pub fn run_dei_with<E, R>(
    env: &E,
    reward: &R,
    config: &DeiConfig,
    seed: u64,
    mut on_iteration: impl FnMut(usize, &QEstimate<E::Key>),
) -> Result<DeiOutcome<E>>
where
    E: DeiEnvironment + Clone + Sync,
    E::State: Send,
    R: Reward<E::State> + Sync + ?Sized,
{
    config.validate()?;
    let mut observations: Vec<(E::Key, f64)> = Vec::new();
    let mut q: Option<QEstimate<E::Key>> = None;
    let mut steps_used = 0;
    let mut iteration_returns = Vec::new();
    let mut truncated = false;
    for iteration in 0..config.iterations {
        let affordable = (config.budget - steps_used) / config.horizon;
        let episodes = config.episodes.min(affordable);
        if episodes < config.episodes {
            truncated = true;
        }
        if episodes == 0 {
            break;
        }
        // Starts and first actions are drawn in order so that UCB sees the
        // selections made earlier in the same iteration.
        let mut pending: HashMap<E::Key, u64> = HashMap::new();
        let mut starts = Vec::with_capacity(episodes);
        for m in 0..episodes {
            let mut rng = episode_rng(seed, (iteration * config.episodes + m) as u64);
            let s0 = env.sample_initial(&mut rng)?;
            let a0 = match (config.exploration, &q) {
                (Exploration::Ucb { c }, Some(q)) => ucb_initial_action(env, q, &s0, &pending, c),
                (Exploration::Ucb { c }, None) => ucb_initial_action(env, &QEstimate::empty(), &s0, &pending, c),
                (Exploration::Uniform, _) => rng.gen_range(0..env.num_actions()),
            };
            *pending.entry(env.q_key(&s0, a0)).or_default() += 1;
            starts.push((rng, s0, a0));
        }
        let results = starts
            .into_par_iter()
            .map(|(mut rng, s0, a0)| run_episode(env, reward, q.as_ref(), s0, a0, &mut rng, config))
            .collect::<Result<Vec<_>>>()?;
        steps_used += episodes * config.horizon;
        iteration_returns.push(results.iter().map(|e| e.total_reward).sum::<f64>() / episodes as f64);
        for e in results {
            observations.extend(e.observations);
        }
        let fitted = fit_q(&observations, config.stepsize);
        on_iteration(iteration + 1, &fitted);
        q = Some(fitted);
        if truncated {
            break;
        }
    }
    Ok(DeiOutcome {
        policy: GreedyQPolicy::new(env.clone(), q.unwrap_or_else(QEstimate::empty)),
        iterations_completed: iteration_returns.len(),
        iteration_returns,
        steps_used,
        truncated,
    })
}

pub fn run_dei<E, R>(env: &E, reward: &R, config: &DeiConfig, seed: u64) -> Result<DeiOutcome<E>>
where
    E: DeiEnvironment + Clone + Sync,
    E::State: Send,
    R: Reward<E::State> + Sync + ?Sized,
{
    run_dei_with(env, reward, config, seed, |_, _| {})
}
