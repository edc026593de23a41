//! Kernel projection IRL.
//!
//! Each iteration solves the forward problem for the reward
//! `R_α(s) = αᵀ K ê(s)`, records the visitation expectation `μ_i` of the
//! optimal policy, and projects the running estimate `μ̄` towards the
//! expert's `μ_E` along `μ_i - μ̄`. Distances are measured in the kernel norm
//! `‖x‖_K = sqrt(xᵀ K x)`. With `K = ΦᵀΦ` the loop is plain projection IRL
//! and the reward is linear in the features, `R(s) = (Φα)ᵀ φ(s)`.

use std::error::Error as StdError;
use std::fmt::Write as _;
use std::io::BufRead;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::features::{visitation_from_occupancy, FeatureError, FeatureSpace, Kernel};
use crate::mdp::{value_iteration, MarkovPolicy, TabularMdp};

/// Denominators of the projection step at or below this count as zero.
pub const STAGNATION_THRESHOLD: f64 = 1e-12;

pub type Result<T, E = KpirlError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum KpirlError {
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error("forward solver failed at iteration {iteration}: {source}")]
    Solver {
        iteration: usize,
        #[source]
        source: Box<dyn StdError + Send + Sync>,
    },
    #[error("projection stagnated at iteration {iteration} (distance {distance})")]
    Stagnation { iteration: usize, distance: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("malformed run archive at line {line}: {message}")]
    Archive { line: usize, message: String },
}

/// `R_α = αᵀK ê`, tabulated per feature index.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelReward {
    alpha: DVector<f64>,
    values: DVector<f64>,
    normalized: bool,
}

impl KernelReward {
    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    /// Reward of every feature index.
    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn value(&self, index: usize) -> f64 {
        self.values[index]
    }

    /// Whether `‖α‖_K = 1` was enforced at construction.
    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Per-state rewards given each state's feature index.
    pub fn state_rewards(&self, state_index: &[usize]) -> Vec<f64> {
        state_index.iter().map(|&i| self.values[i]).collect()
    }

    /// Linear weights `w = Φα`; equals the reward's feature weights when the
    /// kernel is the dot product.
    pub fn linear_weights(&self, space: &FeatureSpace) -> DVector<f64> {
        space.matrix() * &self.alpha
    }
}

pub fn reward_from_alpha(alpha: DVector<f64>, kernel: &Kernel) -> Result<KernelReward> {
    if alpha.len() != kernel.size() {
        return Err(KpirlError::InvalidArgument(format!(
            "α has {} entries for a kernel of size {}",
            alpha.len(),
            kernel.size()
        )));
    }
    let values = kernel.gram().transpose() * &alpha;
    Ok(KernelReward { alpha, values, normalized: false })
}

/// Scales `α` to unit kernel norm (zero-norm `α` is left alone).
pub fn normalized_reward(alpha: DVector<f64>, kernel: &Kernel) -> Result<KernelReward> {
    let norm = kernel.norm(&alpha)?;
    let alpha = if norm > 0.0 { alpha / norm } else { alpha };
    let mut r = reward_from_alpha(alpha, kernel)?;
    r.normalized = norm > 0.0;
    Ok(r)
}

/// Solves the forward RL problem for one reward.
pub trait ForwardSolver {
    type Policy;

    /// Returns the solved policy and its visitation expectation over the
    /// feature space.
    fn solve(
        &mut self,
        reward: &KernelReward,
        iteration: usize,
    ) -> std::result::Result<(Self::Policy, DVector<f64>), Box<dyn StdError + Send + Sync>>;
}

/// Exact solver for explicit MDPs: value iteration plus exact occupancy.
pub struct TabularSolver<'a> {
    mdp: &'a TabularMdp,
    state_index: &'a [usize],
    features: usize,
}

impl<'a> TabularSolver<'a> {
    /// `state_index[s]` is the feature index of state `s`.
    pub fn new(mdp: &'a TabularMdp, state_index: &'a [usize], features: usize) -> Self {
        TabularSolver { mdp, state_index, features }
    }

    /// Exact `μ_ê(π)` of any tabular policy.
    pub fn visitation(&self, policy: &MarkovPolicy) -> DVector<f64> {
        visitation_from_occupancy(&self.mdp.state_visitation(policy), self.state_index, self.features)
    }
}

impl ForwardSolver for TabularSolver<'_> {
    type Policy = MarkovPolicy;

    fn solve(
        &mut self,
        reward: &KernelReward,
        _iteration: usize,
    ) -> std::result::Result<(MarkovPolicy, DVector<f64>), Box<dyn StdError + Send + Sync>> {
        let rewards = reward.state_rewards(self.state_index);
        let solution = value_iteration(self.mdp, &rewards)?;
        let mu = self.visitation(&solution.policy);
        Ok((solution.policy, mu))
    }
}

/// Stopping tolerance in kernel-norm units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tolerance {
    Absolute(f64),
    /// Fraction of `‖μ_E‖_K`.
    RelativeToExpert(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct KpirlConfig {
    pub tolerance: Tolerance,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for KpirlConfig {
    fn default() -> Self {
        KpirlConfig { tolerance: Tolerance::RelativeToExpert(0.05), max_iterations: 50, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub kappa_raw: f64,
    pub kappa: f64,
}

/// One projection step. Returns `(κ_raw, κ)` and the new `μ̄`.
pub fn projection_step(
    mu_bar_prev: &DVector<f64>,
    mu_i: &DVector<f64>,
    mu_expert: &DVector<f64>,
    kernel: &Kernel,
    iteration: usize,
) -> Result<(Projection, DVector<f64>)> {
    let step = mu_i - mu_bar_prev;
    let denominator = kernel.inner(&step, &step)?;
    if denominator <= STAGNATION_THRESHOLD {
        let distance = kernel.norm(&(mu_expert - mu_bar_prev))?;
        return Err(KpirlError::Stagnation { iteration, distance });
    }
    let kappa_raw = kernel.inner(&step, &(mu_expert - mu_bar_prev))? / denominator;
    let kappa = kappa_raw.clamp(0.0, 1.0);
    Ok((Projection { kappa_raw, kappa }, mu_bar_prev + step * kappa))
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub reward: KernelReward,
    pub mu: DVector<f64>,
    pub mu_bar: DVector<f64>,
    /// `None` on the first iteration, which has no projection.
    pub projection: Option<Projection>,
    /// `‖μ_E - μ̄_i‖_K`.
    pub distance: f64,
}

#[derive(Debug, Clone)]
pub struct KpirlRun<P> {
    pub epsilon: f64,
    pub max_iterations: usize,
    pub mu_expert: DVector<f64>,
    pub iterations: Vec<IterationRecord>,
    pub policies: Vec<P>,
    /// Convex weights of the mixed policy over `policies`.
    pub weights: Vec<f64>,
    pub converged: bool,
}

impl<P> KpirlRun<P> {
    pub fn final_distance(&self) -> f64 {
        self.iterations.last().map_or(f64::INFINITY, |r| r.distance)
    }

    pub fn distances(&self) -> Vec<f64> {
        self.iterations.iter().map(|r| r.distance).collect()
    }

    /// `Σ_j w_j μ_j`.
    pub fn mixed_mu(&self) -> DVector<f64> {
        self.iterations
            .iter()
            .zip(&self.weights)
            .fold(DVector::zeros(self.mu_expert.len()), |acc, (r, w)| acc + &r.mu * *w)
    }
}

/// Runs the projection loop to `d_i ≤ ε` or `max_iterations`.
pub fn run_kpirl<S: ForwardSolver>(
    mu_expert: &DVector<f64>,
    kernel: &Kernel,
    solver: &mut S,
    config: &KpirlConfig,
) -> Result<KpirlRun<S::Policy>> {
    if mu_expert.len() != kernel.size() {
        return Err(KpirlError::InvalidArgument(format!(
            "μ_E has {} entries for a kernel of size {}",
            mu_expert.len(),
            kernel.size()
        )));
    }
    if config.max_iterations == 0 {
        return Err(KpirlError::InvalidArgument("max_iterations must be at least 1".into()));
    }
    let epsilon = match config.tolerance {
        Tolerance::Absolute(e) => e,
        Tolerance::RelativeToExpert(f) => f * kernel.norm(mu_expert)?,
    };
    if !(epsilon >= 0.0) {
        return Err(KpirlError::InvalidArgument(format!("tolerance {epsilon} must be non-negative")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let alpha: DVector<f64> = DVector::from_fn(kernel.size(), |_, _| StandardNormal.sample(&mut rng));
    let mut reward = normalized_reward(alpha, kernel)?;

    let mut run = KpirlRun {
        epsilon,
        max_iterations: config.max_iterations,
        mu_expert: mu_expert.clone(),
        iterations: Vec::new(),
        policies: Vec::new(),
        weights: Vec::new(),
        converged: false,
    };
    let mut mu_bar: Option<DVector<f64>> = None;
    for iteration in 1..=config.max_iterations {
        let (policy, mu) =
            solver.solve(&reward, iteration).map_err(|source| KpirlError::Solver { iteration, source })?;
        if mu.len() != kernel.size() {
            return Err(KpirlError::InvalidArgument(format!(
                "solver returned μ of length {} at iteration {iteration}",
                mu.len()
            )));
        }
        let (projection, next_bar) = match &mu_bar {
            None => (None, mu.clone()),
            Some(prev) => {
                let (p, bar) = projection_step(prev, &mu, mu_expert, kernel, iteration)?;
                (Some(p), bar)
            }
        };
        match projection {
            None => run.weights.push(1.0),
            Some(p) => {
                run.weights.iter_mut().for_each(|w| *w *= 1.0 - p.kappa);
                run.weights.push(p.kappa);
            }
        }
        let distance = kernel.norm(&(mu_expert - &next_bar))?;
        run.iterations.push(IterationRecord {
            reward: reward.clone(),
            mu,
            mu_bar: next_bar.clone(),
            projection,
            distance,
        });
        run.policies.push(policy);
        if distance <= epsilon {
            run.converged = true;
            break;
        }
        reward = reward_from_alpha(mu_expert - &next_bar, kernel)?;
        mu_bar = Some(next_bar);
    }
    Ok(run)
}

/// Index of the iteration whose own `μ_i` is closest to `μ_E` (earliest on
/// ties).
pub fn select_iteration<P>(run: &KpirlRun<P>, mu_expert: &DVector<f64>, kernel: &Kernel) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, record) in run.iterations.iter().enumerate() {
        let d = kernel.norm(&(mu_expert - &record.mu))?;
        if best.map_or(true, |(_, b)| d < b) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i).ok_or_else(|| KpirlError::InvalidArgument("run has no iterations".into()))
}

pub fn select_reward<'a, P>(
    run: &'a KpirlRun<P>,
    mu_expert: &DVector<f64>,
    kernel: &Kernel,
) -> Result<&'a KernelReward> {
    select_iteration(run, mu_expert, kernel).map(|i| &run.iterations[i].reward)
}

/// Numeric text archive: a header line, then one
/// `iteration kappa_raw kappa distance policy α_1 … α_N` line per iteration
/// (`-` for the missing first-iteration κ).
pub fn write_run_archive<P>(run: &KpirlRun<P>) -> String {
    let n = run.mu_expert.len();
    let mut out = format!(
        "# kpirl-run n={n} iterations={} epsilon={} converged={}\n",
        run.iterations.len(),
        run.epsilon,
        run.converged
    );
    for (i, r) in run.iterations.iter().enumerate() {
        let (raw, kappa) = match r.projection {
            Some(p) => (p.kappa_raw.to_string(), p.kappa.to_string()),
            None => ("-".into(), "-".into()),
        };
        write!(out, "{} {raw} {kappa} {} {i}", i + 1, r.distance).unwrap();
        for a in r.reward.alpha().iter() {
            write!(out, " {a}").unwrap();
        }
        out.push('\n');
    }
    out
}

/// One parsed archive line.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchiveEntry {
    pub iteration: usize,
    pub projection: Option<Projection>,
    pub distance: f64,
    pub policy: usize,
    pub alpha: DVector<f64>,
}

pub fn read_run_archive<R: BufRead>(input: R) -> Result<Vec<ArchiveEntry>> {
    let err = |line: usize, message: &str| KpirlError::Archive { line, message: message.into() };
    let mut entries = Vec::new();
    let mut width = None;
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| err(i + 1, &e.to_string()))?;
        let lineno = i + 1;
        if let Some(header) = line.strip_prefix('#') {
            width = header.split_whitespace().find_map(|f| f.strip_prefix("n=")).and_then(|v| v.parse::<usize>().ok());
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        let n = width.ok_or_else(|| err(lineno, "missing header"))?;
        if f.len() != 5 + n {
            return Err(err(lineno, &format!("expected {} fields, found {}", 5 + n, f.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| err(lineno, &format!("bad number `{s}`")));
        let projection = match (f[1], f[2]) {
            ("-", "-") => None,
            (a, b) => Some(Projection { kappa_raw: num(a)?, kappa: num(b)? }),
        };
        entries.push(ArchiveEntry {
            iteration: f[0].parse().map_err(|_| err(lineno, "bad iteration"))?,
            projection,
            distance: num(f[3])?,
            policy: f[4].parse().map_err(|_| err(lineno, "bad policy id"))?,
            alpha: DVector::from_vec(f[5..].iter().map(|s| num(s)).collect::<Result<_>>()?),
        });
    }
    Ok(entries)
}

/// `ΦᵀΦ` Gram matrix of a feature space, as used by plain projection IRL.
pub fn linear_gram(space: &FeatureSpace) -> DMatrix<f64> {
    let phi = space.matrix();
    phi.transpose() * phi
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::KernelKind;
    use approx::assert_abs_diff_eq;

    fn identity(n: usize) -> Kernel {
        Kernel::from_gram(KernelKind::Dot, DMatrix::identity(n, n)).unwrap()
    }

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn projection_clamps_overshoot() {
        let (p, bar) = projection_step(&v(&[0.0, 0.0]), &v(&[1.0, 0.0]), &v(&[2.0, 0.0]), &identity(2), 2).unwrap();
        assert_eq!(p.kappa_raw, 2.0);
        assert_eq!(p.kappa, 1.0);
        assert_eq!(bar, v(&[1.0, 0.0]));
    }

    #[test]
    fn projection_interior() {
        let (p, bar) = projection_step(&v(&[0.0, 0.0]), &v(&[1.0, 0.0]), &v(&[0.5, 0.5]), &identity(2), 2).unwrap();
        assert_eq!(p.kappa_raw, 0.5);
        assert_eq!(bar, v(&[0.5, 0.0]));
        // Expert on the segment: projected exactly.
        let (_, bar) = projection_step(&v(&[0.0, 0.0]), &v(&[2.0, 2.0]), &v(&[0.5, 0.5]), &identity(2), 2).unwrap();
        assert_eq!(bar, v(&[0.5, 0.5]));
    }

    #[test]
    fn projection_stagnation() {
        let err = projection_step(&v(&[1.0, 0.0]), &v(&[1.0, 0.0]), &v(&[0.0, 0.0]), &identity(2), 4).unwrap_err();
        assert!(matches!(err, KpirlError::Stagnation { iteration: 4, .. }));
    }

    #[test]
    fn reward_from_unit_alpha() {
        let r = reward_from_alpha(v(&[0.0, 1.0, 0.0]), &identity(3)).unwrap();
        assert_eq!(r.values().as_slice(), &[0.0, 1.0, 0.0]);
        let z = reward_from_alpha(DVector::zeros(3), &identity(3)).unwrap();
        assert!(z.values().iter().all(|&x| x == 0.0));
        assert!(reward_from_alpha(DVector::zeros(2), &identity(3)).is_err());
    }

    #[test]
    fn reward_matches_double_loop() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 7;
        let b = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let kernel = Kernel::from_gram(KernelKind::Dot, &b * b.transpose()).unwrap();
        let alpha = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let r = reward_from_alpha(alpha.clone(), &kernel).unwrap();
        for j in 0..n {
            let mut naive = 0.0;
            for i in 0..n {
                naive += alpha[i] * kernel.gram()[(i, j)];
            }
            assert_abs_diff_eq!(r.value(j), naive, epsilon = 1e-12);
        }
    }

    /// Returns a scripted sequence of expectations.
    struct Scripted(Vec<DVector<f64>>);
    impl ForwardSolver for Scripted {
        type Policy = usize;
        fn solve(
            &mut self,
            _: &KernelReward,
            iteration: usize,
        ) -> std::result::Result<(usize, DVector<f64>), Box<dyn StdError + Send + Sync>> {
            self.0.get(iteration - 1).cloned().map(|m| (iteration, m)).ok_or_else(|| "script exhausted".into())
        }
    }

    #[test]
    fn immediate_match_exits() {
        let mu_e = v(&[1.0, 2.0]);
        let mut solver = Scripted(vec![mu_e.clone()]);
        let cfg = KpirlConfig { tolerance: Tolerance::Absolute(0.0), ..Default::default() };
        let run = run_kpirl(&mu_e, &identity(2), &mut solver, &cfg).unwrap();
        assert!(run.converged);
        assert_eq!(run.iterations.len(), 1);
        assert_eq!(run.final_distance(), 0.0);
        assert_eq!(run.weights, vec![1.0]);
    }

    #[test]
    fn second_alpha_is_expert_minus_estimate() {
        let mu_e = v(&[2.0, 0.0]);
        let mut solver = Scripted(vec![v(&[1.0, 0.0]), v(&[2.0, 0.0])]);
        let cfg = KpirlConfig { tolerance: Tolerance::Absolute(1e-12), ..Default::default() };
        let run = run_kpirl(&mu_e, &identity(2), &mut solver, &cfg).unwrap();
        assert_eq!(run.iterations[1].reward.alpha(), &v(&[1.0, 0.0]));
        assert!(run.converged);
        assert_eq!(run.iterations.len(), 2);
        assert_eq!(run.weights, vec![0.0, 1.0]);
    }

    #[test]
    fn solver_failure_carries_iteration() {
        let mut solver = Scripted(vec![v(&[0.0, 0.0])]);
        let cfg = KpirlConfig { tolerance: Tolerance::Absolute(0.0), ..Default::default() };
        let err = run_kpirl(&v(&[1.0, 0.0]), &identity(2), &mut solver, &cfg).unwrap_err();
        assert!(matches!(err, KpirlError::Solver { iteration: 2, .. }));
    }

    fn run_with_mus(mus: &[DVector<f64>]) -> KpirlRun<usize> {
        KpirlRun {
            epsilon: 0.0,
            max_iterations: 50,
            mu_expert: DVector::zeros(1),
            iterations: mus
                .iter()
                .map(|m| IterationRecord {
                    reward: reward_from_alpha(m.clone(), &identity(1)).unwrap(),
                    mu: m.clone(),
                    mu_bar: m.clone(),
                    projection: None,
                    distance: 0.0,
                })
                .collect(),
            policies: (0..mus.len()).collect(),
            weights: vec![],
            converged: false,
        }
    }

    #[test]
    fn select_reward_argmin_and_ties() {
        let k = identity(1);
        let zero = DVector::zeros(1);
        let run = run_with_mus(&[v(&[3.0]), v(&[1.0]), v(&[2.0])]);
        assert_eq!(select_iteration(&run, &zero, &k).unwrap(), 1);
        let run = run_with_mus(&[v(&[1.0]), v(&[-1.0])]);
        assert_eq!(select_iteration(&run, &zero, &k).unwrap(), 0);
        let run = run_with_mus(&[v(&[5.0])]);
        assert_eq!(select_reward(&run, &zero, &k).unwrap().alpha(), &v(&[5.0]));
        assert!(select_iteration(&run_with_mus(&[]), &zero, &k).is_err());
    }

    #[test]
    fn archive_roundtrip() {
        let mu_e = v(&[2.0, 0.5]);
        let mut solver = Scripted(vec![v(&[1.0, 0.0]), v(&[0.0, 1.0]), v(&[2.0, 0.5])]);
        let cfg = KpirlConfig { tolerance: Tolerance::Absolute(1e-9), ..Default::default() };
        let run = run_kpirl(&mu_e, &identity(2), &mut solver, &cfg).unwrap();
        let text = write_run_archive(&run);
        let entries = read_run_archive(text.as_bytes()).unwrap();
        assert_eq!(entries.len(), run.iterations.len());
        for (e, r) in entries.iter().zip(&run.iterations) {
            assert_eq!(&e.alpha, r.reward.alpha());
            assert_eq!(e.projection, r.projection);
            assert_eq!(e.distance, r.distance);
        }
    }
}
