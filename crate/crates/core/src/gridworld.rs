//! Random gridworlds and the IRL benchmark protocol run on them.

use std::time::Instant;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::features::{
    gram_matrix, visitation_from_indices, FeatureError, FeatureMap, FeatureSpace, Kernel, KernelKind,
};
use crate::kpirl::{run_kpirl, select_reward, KernelReward, KpirlConfig, KpirlError, KpirlRun, TabularSolver};
use crate::mdp::tabular::optimal_policy_uniform_ties;
use crate::mdp::{
    rollout_episode, value_iteration, Environment as _, Horizon, MarkovPolicy, MdpError, TabularMdp, Trajectory,
};

pub const ACTIONS: [&str; 5] = ["up", "down", "left", "right", "stay"];
const MOVES: [(i64, i64); 5] = [(-1, 0), (1, 0), (0, -1), (0, 1), (0, 0)];
const TIE_TOLERANCE: f64 = 1e-10;

pub type Result<T, E = GridworldError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum GridworldError {
    #[error(transparent)]
    Mdp(#[from] MdpError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Kpirl(#[from] KpirlError),
    #[error("degenerate world: optimal value {0:e}")]
    Degenerate(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridworldConfig {
    pub n: usize,
    pub seed: u64,
    pub horizon: usize,
    pub discount: f64,
}

impl GridworldConfig {
    pub fn new(n: usize, seed: u64) -> Self {
        GridworldConfig { n, seed, horizon: 100, discount: 0.9 }
    }
}

#[derive(Debug, Clone)]
pub struct Gridworld {
    n: usize,
    mdp: TabularMdp,
    rewards: Vec<f64>,
}

/// Row/column threshold encoding over `2n` bits.
#[derive(Debug, Clone, Copy)]
pub struct GridFeatures {
    pub n: usize,
}

impl FeatureMap<usize> for GridFeatures {
    fn dim(&self) -> usize {
        2 * self.n
    }

    fn features(&self, state: &usize) -> Vec<f64> {
        let (row, col) = (state / self.n + 1, state % self.n + 1);
        (1..=self.n).map(|j| f64::from(j >= row)).chain((1..=self.n).map(|j| f64::from(j >= col))).collect()
    }
}

/// Generates a world with rewards `u⁸`, `u ~ U(0, 1)`.
pub fn generate_gridworld(config: &GridworldConfig) -> Result<Gridworld> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let rewards = (0..config.n * config.n).map(|_| rng.gen::<f64>().powi(8)).collect();
    Gridworld::with_rewards(config, rewards)
}

impl Gridworld {
    /// A world with the given per-state rewards and a uniform start
    /// distribution.
    pub fn with_rewards(config: &GridworldConfig, rewards: Vec<f64>) -> Result<Self> {
        let n = config.n;
        if n < 2 {
            return Err(GridworldError::InvalidArgument(format!("side length {n} < 2")));
        }
        if rewards.len() != n * n {
            return Err(GridworldError::InvalidArgument(format!("{} rewards for {} states", rewards.len(), n * n)));
        }
        let transitions = (0..n * n).map(|s| (0..MOVES.len()).map(|a| vec![(step(n, s, a), 1.0)]).collect()).collect();
        let initial = vec![1.0 / (n * n) as f64; n * n];
        let mdp = TabularMdp::new(transitions, initial, config.discount, Horizon::Finite(config.horizon))?;
        Ok(Gridworld { n, mdp, rewards })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_states(&self) -> usize {
        self.n * self.n
    }

    pub fn mdp(&self) -> &TabularMdp {
        &self.mdp
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    pub fn feature_map(&self) -> GridFeatures {
        GridFeatures { n: self.n }
    }

    pub fn features(&self, state: usize) -> Vec<f64> {
        self.feature_map().features(&state)
    }

    pub fn feature_space(&self) -> Result<FeatureSpace> {
        let states: Vec<usize> = (0..self.num_states()).collect();
        Ok(FeatureSpace::from_states(&states, &self.feature_map(), self.num_states())?)
    }

    /// Feature index of every state.
    pub fn state_index(&self, space: &FeatureSpace) -> Result<Vec<usize>> {
        let map = self.feature_map();
        Ok((0..self.num_states()).map(|s| space.index_state(&map, &s)).collect::<Result<_, _>>()?)
    }

    /// Optimal policy for the true reward.
    pub fn expert_policy(&self) -> Result<MarkovPolicy> {
        Ok(value_iteration(&self.mdp, &self.rewards)?.policy)
    }
}

/// Deterministic successor; moves off the grid stay put.
pub fn step(n: usize, state: usize, action: usize) -> usize {
    let (r, c) = ((state / n) as i64, (state % n) as i64);
    let (dr, dc) = MOVES[action];
    let (nr, nc) = (r + dr, c + dc);
    if (0..n as i64).contains(&nr) && (0..n as i64).contains(&nc) {
        (nr * n as i64 + nc) as usize
    } else {
        state
    }
}

/// `count` optimal-policy rollouts from uniformly random start states.
pub fn simulate_expert(world: &Gridworld, count: usize, seed: u64) -> Result<Vec<Trajectory<usize>>> {
    if count == 0 {
        return Err(GridworldError::InvalidArgument("at least one expert trajectory is required".into()));
    }
    let policy = world.expert_policy()?;
    (0..count as u64)
        .map(|e| {
            rollout_episode(&world.mdp, &policy, seed, e)
                .map(|t| t.with_source(crate::mdp::Source::Expert))
                .map_err(Into::into)
        })
        .collect()
}

/// Start-state frequencies of a trajectory set.
pub fn empirical_starts(trajectories: &[Trajectory<usize>], num_states: usize) -> Vec<f64> {
    let mut d = vec![0.0; num_states];
    for t in trajectories {
        if let Some((s, _)) = t.steps().first() {
            d[*s] += 1.0;
        }
    }
    let total: f64 = d.iter().sum();
    d.iter_mut().for_each(|p| *p /= total);
    d
}

/// `100 (V* - V^{π_L}) / V*` on the true reward, where `π_L` is optimal for
/// the learned reward and spreads its mass uniformly over tied actions.
pub fn percent_value_lost(world: &Gridworld, learned: &[f64]) -> Result<f64> {
    let mdp = world.mdp();
    let v_star = value_iteration(mdp, world.rewards())?.expected_value(mdp);
    if v_star <= 1e-12 {
        return Err(GridworldError::Degenerate(v_star));
    }
    let learner = optimal_policy_uniform_ties(mdp, learned, TIE_TOLERANCE)?;
    let v_learned = mdp.expected_value(world.rewards(), &learner.policy)?;
    Ok((100.0 * (v_star - v_learned) / v_star).clamp(0.0, 100.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    /// Projection IRL: dot-product kernel on the raw features.
    Pirl,
    /// Kernel projection IRL with a Gaussian kernel.
    Kpirl,
}

impl std::str::FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "pirl" => Ok(Algorithm::Pirl),
            "kpirl" => Ok(Algorithm::Kpirl),
            other => Err(format!("unknown algorithm `{other}`")),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Algorithm::Pirl => "pirl",
            Algorithm::Kpirl => "kpirl",
        })
    }
}

/// Everything an IRL run on a gridworld produced.
#[derive(Debug, Clone)]
pub struct GridIrlOutcome {
    pub run: KpirlRun<MarkovPolicy>,
    pub kernel: Kernel,
    pub mu_expert: DVector<f64>,
    pub learned_reward: KernelReward,
    /// Learned reward per state.
    pub learned_state_rewards: Vec<f64>,
}

/// Learns a reward from expert trajectories with the exact tabular solver.
///
/// The learner's start distribution is the empirical start distribution of
/// the expert trajectories.
pub fn learn_reward(
    world: &Gridworld,
    experts: &[Trajectory<usize>],
    kernel_kind: KernelKind,
    config: &KpirlConfig,
) -> Result<GridIrlOutcome> {
    let space = world.feature_space()?;
    let state_index = world.state_index(&space)?;
    let kernel = gram_matrix(kernel_kind, &space)?;
    let sequences: Vec<Vec<usize>> = experts.iter().map(|t| t.states().map(|&s| state_index[s]).collect()).collect();
    let mu_expert = visitation_from_indices(&sequences, world.mdp().discount(), space.len());
    let learner_mdp = world.mdp().with_initial(empirical_starts(experts, world.num_states()))?;
    let mut solver = TabularSolver::new(&learner_mdp, &state_index, space.len());
    let run = run_kpirl(&mu_expert, &kernel, &mut solver, config)?;
    let learned_reward = select_reward(&run, &mu_expert, &kernel)?.clone();
    let learned_state_rewards = learned_reward.state_rewards(&state_index);
    Ok(GridIrlOutcome { run, kernel, mu_expert, learned_reward, learned_state_rewards })
}

/// Kernel used by each benchmark algorithm.
pub fn algorithm_kernel(algorithm: Algorithm, bandwidth: f64) -> KernelKind {
    match algorithm {
        Algorithm::Pirl => KernelKind::Dot,
        Algorithm::Kpirl => KernelKind::Gaussian { bandwidth },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    pub algorithms: Vec<Algorithm>,
    pub sizes: Vec<usize>,
    pub trajectory_counts: Vec<usize>,
    pub repetitions: usize,
    pub seed: u64,
    pub bandwidth: f64,
    pub horizon: usize,
    pub discount: f64,
    pub kpirl: KpirlConfig,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            algorithms: vec![Algorithm::Pirl, Algorithm::Kpirl],
            sizes: vec![8],
            trajectory_counts: vec![100],
            repetitions: 20,
            seed: 0,
            bandwidth: 0.6,
            horizon: 100,
            discount: 0.9,
            kpirl: KpirlConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub algorithm: Algorithm,
    pub n: usize,
    pub trajectories: usize,
    pub repetition: usize,
    pub percent_value_lost: std::result::Result<f64, String>,
    pub runtime_seconds: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub algorithm: Algorithm,
    pub n: usize,
    pub trajectories: usize,
    pub mean_percent_value_lost: f64,
    pub mean_runtime_seconds: f64,
    pub runs: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkReport {
    pub discount: f64,
    pub horizon: usize,
    pub rows: Vec<ReportRow>,
    pub runs: Vec<RunResult>,
}

impl BenchmarkReport {
    pub fn row(&self, algorithm: Algorithm, n: usize, trajectories: usize) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.algorithm == algorithm && r.n == n && r.trajectories == trajectories)
    }

    /// Delimited text, one line per row.
    pub fn to_delimited(&self, sep: char) -> String {
        let mut out = format!(
            "# gamma={} horizon={}\nalgorithm{sep}n{sep}trajectories{sep}mean_percent_value_lost{sep}mean_runtime_s{sep}runs{sep}failures\n",
            self.discount, self.horizon
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{}{sep}{}{sep}{}{sep}{:.6}{sep}{:.6}{sep}{}{sep}{}\n",
                r.algorithm, r.n, r.trajectories, r.mean_percent_value_lost, r.mean_runtime_seconds, r.runs, r.failures
            ));
        }
        out
    }

    /// Whitespace table with one block per algorithm, for plotting loss
    /// against `n`.
    pub fn to_gnuplot(&self) -> String {
        let mut out = String::new();
        let mut algos: Vec<Algorithm> = self.rows.iter().map(|r| r.algorithm).collect();
        algos.dedup();
        for a in algos {
            out.push_str(&format!("# {a}\n# n trajectories loss runtime\n"));
            for r in self.rows.iter().filter(|r| r.algorithm == a) {
                out.push_str(&format!(
                    "{} {} {} {}\n",
                    r.n, r.trajectories, r.mean_percent_value_lost, r.mean_runtime_seconds
                ));
            }
            out.push_str("\n\n");
        }
        out
    }
}

/// World seed of repetition `rep` at size `n`.
fn world_seed(seed: u64, n: usize, rep: usize) -> u64 {
    seed ^ ((n as u64) << 32) ^ rep as u64
}

/// One benchmark cell: generate, simulate, learn, score.
pub fn run_single(
    algorithm: Algorithm,
    n: usize,
    trajectories: usize,
    repetition: usize,
    config: &BenchmarkConfig,
) -> RunResult {
    let started = Instant::now();
    let outcome = (|| -> Result<(f64, usize)> {
        let wc = GridworldConfig {
            n,
            seed: world_seed(config.seed, n, repetition),
            horizon: config.horizon,
            discount: config.discount,
        };
        let world = generate_gridworld(&wc)?;
        let experts = simulate_expert(&world, trajectories, wc.seed.wrapping_add(1))?;
        let kpirl = KpirlConfig { seed: wc.seed.wrapping_add(2), ..config.kpirl.clone() };
        let learned = learn_reward(&world, &experts, algorithm_kernel(algorithm, config.bandwidth), &kpirl)?;
        Ok((percent_value_lost(&world, &learned.learned_state_rewards)?, learned.run.iterations.len()))
    })();
    let runtime_seconds = started.elapsed().as_secs_f64();
    let (percent_value_lost, iterations) = match outcome {
        Ok((loss, it)) => (Ok(loss), it),
        Err(e) => (Err(e.to_string()), 0),
    };
    RunResult { algorithm, n, trajectories, repetition, percent_value_lost, runtime_seconds, iterations }
}

/// Seeded sweep over algorithms × sizes × trajectory counts × repetitions.
/// Failed runs are recorded and excluded from the means.
pub fn run_benchmark(config: &BenchmarkConfig) -> Result<BenchmarkReport> {
    if config.repetitions == 0
        || config.sizes.is_empty()
        || config.algorithms.is_empty()
        || config.trajectory_counts.is_empty()
    {
        return Err(GridworldError::InvalidArgument("empty benchmark sweep".into()));
    }
    let mut cells = Vec::new();
    for &a in &config.algorithms {
        for &n in &config.sizes {
            for &m in &config.trajectory_counts {
                for rep in 0..config.repetitions {
                    cells.push((a, n, m, rep));
                }
            }
        }
    }
    let runs: Vec<RunResult> = cells.par_iter().map(|&(a, n, m, rep)| run_single(a, n, m, rep, config)).collect();
    let mut rows = Vec::new();
    for &a in &config.algorithms {
        for &n in &config.sizes {
            for &m in &config.trajectory_counts {
                let cell: Vec<&RunResult> =
                    runs.iter().filter(|r| r.algorithm == a && r.n == n && r.trajectories == m).collect();
                let ok: Vec<f64> = cell.iter().filter_map(|r| r.percent_value_lost.as_ref().ok().copied()).collect();
                let mean = |xs: &[f64]| if xs.is_empty() { f64::NAN } else { xs.iter().sum::<f64>() / xs.len() as f64 };
                let times: Vec<f64> = cell.iter().map(|r| r.runtime_seconds).collect();
                rows.push(ReportRow {
                    algorithm: a,
                    n,
                    trajectories: m,
                    mean_percent_value_lost: mean(&ok),
                    mean_runtime_seconds: mean(&times),
                    runs: ok.len(),
                    failures: cell.len() - ok.len(),
                });
            }
        }
    }
    Ok(BenchmarkReport { discount: config.discount, horizon: config.horizon, rows, runs })
}
