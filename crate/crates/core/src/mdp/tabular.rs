//! Explicit finite MDPs and their exact solvers.
//!
//! These are the oracles the sampled algorithms are checked against:
//! backward induction / value iteration, exact policy evaluation, and exact
//! discounted state occupancy.

use rand::RngCore;

use super::policy::{sample_categorical, DecisionRule, MarkovPolicy, Policy};
use super::{Environment, MdpError, Result};

const ROW_TOLERANCE: f64 = 1e-12;
const VALUE_ITERATION_RESIDUAL: f64 = 1e-10;
const UNBOUNDED_TRUNCATION: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Horizon {
    Finite(usize),
    Unbounded,
}

/// Explicit MDP with sparse transition rows `transitions[s][a] = [(s', p)]`.
#[derive(Debug, Clone)]
pub struct TabularMdp {
    transitions: Vec<Vec<Vec<(usize, f64)>>>,
    initial: Vec<f64>,
    discount: f64,
    horizon: Horizon,
    num_actions: usize,
}

impl TabularMdp {
    pub fn new(
        transitions: Vec<Vec<Vec<(usize, f64)>>>,
        initial: Vec<f64>,
        discount: f64,
        horizon: Horizon,
    ) -> Result<Self> {
        let n = transitions.len();
        if n == 0 {
            return Err(MdpError::InvalidArgument("no states".into()));
        }
        let num_actions = transitions[0].len();
        if num_actions == 0 {
            return Err(MdpError::InvalidArgument("no actions".into()));
        }
        if !(0.0..1.0).contains(&discount) {
            return Err(MdpError::InvalidArgument(format!("discount {discount} outside [0, 1)")));
        }
        if horizon == Horizon::Finite(0) {
            return Err(MdpError::InvalidArgument("horizon must be at least 1".into()));
        }
        for (s, row) in transitions.iter().enumerate() {
            if row.len() != num_actions {
                return Err(MdpError::InvalidArgument(format!("state {s} has {} actions", row.len())));
            }
            for (a, dist) in row.iter().enumerate() {
                if dist.iter().any(|&(t, p)| t >= n || !(p >= 0.0)) {
                    return Err(MdpError::InvalidArgument(format!("bad successor in ({s}, {a})")));
                }
                let total: f64 = dist.iter().map(|&(_, p)| p).sum();
                if (total - 1.0).abs() > ROW_TOLERANCE {
                    return Err(MdpError::InvalidArgument(format!("transition row ({s}, {a}) sums to {total}")));
                }
            }
        }
        check_distribution(&initial, n)?;
        Ok(TabularMdp { transitions, initial, discount, horizon, num_actions })
    }

    pub fn num_states(&self) -> usize {
        self.transitions.len()
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn horizon_kind(&self) -> Horizon {
        self.horizon
    }

    pub fn transitions(&self, state: usize, action: usize) -> &[(usize, f64)] {
        &self.transitions[state][action]
    }

    /// Same dynamics with a different initial-state distribution.
    pub fn with_initial(&self, initial: Vec<f64>) -> Result<Self> {
        check_distribution(&initial, self.num_states())?;
        Ok(TabularMdp { initial, ..self.clone() })
    }

    pub fn with_horizon(&self, horizon: Horizon) -> Self {
        TabularMdp { horizon, ..self.clone() }
    }

    fn expected_next(&self, values: &[f64], state: usize, action: usize) -> f64 {
        self.transitions[state][action].iter().map(|&(t, p)| p * values[t]).sum()
    }

    fn check_reward(&self, reward: &[f64]) -> Result<()> {
        if reward.len() != self.num_states() {
            return Err(MdpError::InvalidArgument(format!(
                "reward has {} entries for {} states",
                reward.len(),
                self.num_states()
            )));
        }
        Ok(())
    }

    /// Exact per-state value `E_s^π[Σ_{t=1..T} γ^{t-1} R(X_t)]`.
    pub fn evaluate_policy<P: Policy<usize> + ?Sized>(&self, reward: &[f64], policy: &P) -> Result<Vec<f64>> {
        self.check_reward(reward)?;
        let n = self.num_states();
        let action_probs = |s: usize, tick: usize| policy.action_probabilities(&s, tick);
        match self.horizon {
            Horizon::Finite(horizon) => {
                // values[s] holds the value with `remaining` states to go.
                let mut values = reward.to_vec();
                for remaining in 2..=horizon {
                    let tick = horizon - remaining;
                    let next: Vec<f64> = (0..n)
                        .map(|s| {
                            let probs = action_probs(s, tick);
                            let cont: f64 = probs
                                .iter()
                                .enumerate()
                                .filter(|(_, &p)| p > 0.0)
                                .map(|(a, &p)| p * self.expected_next(&values, s, a))
                                .sum();
                            reward[s] + self.discount * cont
                        })
                        .collect();
                    values = next;
                }
                Ok(values)
            }
            Horizon::Unbounded => {
                let probs: Vec<Vec<f64>> = (0..n).map(|s| action_probs(s, 0)).collect();
                let mut values = reward.to_vec();
                loop {
                    let next: Vec<f64> = (0..n)
                        .map(|s| {
                            let cont: f64 = probs[s]
                                .iter()
                                .enumerate()
                                .filter(|(_, &p)| p > 0.0)
                                .map(|(a, &p)| p * self.expected_next(&values, s, a))
                                .sum();
                            reward[s] + self.discount * cont
                        })
                        .collect();
                    let residual = sup_distance(&next, &values);
                    values = next;
                    if residual <= VALUE_ITERATION_RESIDUAL * (1.0 - self.discount) {
                        return Ok(values);
                    }
                }
            }
        }
    }

    /// `V̄^π = Σ_s d(s) V^π(s)`.
    pub fn expected_value<P: Policy<usize> + ?Sized>(&self, reward: &[f64], policy: &P) -> Result<f64> {
        let values = self.evaluate_policy(reward, policy)?;
        Ok(dot(&self.initial, &values))
    }

    /// Exact discounted state occupancy `Σ_t γ^{t-1} Pr_d^π(X_t = s)`,
    /// computed by propagating the state distribution forward.
    pub fn state_visitation<P: Policy<usize> + ?Sized>(&self, policy: &P) -> Vec<f64> {
        let n = self.num_states();
        let mut occupancy = vec![0.0; n];
        let mut dist = self.initial.clone();
        let mut weight = 1.0;
        let mut tick = 0;
        loop {
            for (o, &p) in occupancy.iter_mut().zip(&dist) {
                *o += weight * p;
            }
            tick += 1;
            let done = match self.horizon {
                Horizon::Finite(h) => tick >= h,
                Horizon::Unbounded => weight * self.discount < UNBOUNDED_TRUNCATION * 1e-5,
            };
            if done {
                return occupancy;
            }
            let mut next = vec![0.0; n];
            for (s, &mass) in dist.iter().enumerate() {
                if mass == 0.0 {
                    continue;
                }
                let probs = policy.action_probabilities(&s, tick - 1);
                for (a, &pa) in probs.iter().enumerate() {
                    if pa == 0.0 {
                        continue;
                    }
                    for &(t, pt) in &self.transitions[s][a] {
                        next[t] += mass * pa * pt;
                    }
                }
            }
            dist = next;
            weight *= self.discount;
        }
    }
}

fn check_distribution(dist: &[f64], n: usize) -> Result<()> {
    let total: f64 = dist.iter().sum();
    if dist.len() != n || dist.iter().any(|&p| !(p >= 0.0)) || (total - 1.0).abs() > ROW_TOLERANCE {
        return Err(MdpError::InvalidArgument(format!(
            "initial distribution must have {n} non-negative entries summing to 1"
        )));
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

impl Environment for TabularMdp {
    type State = usize;

    fn num_actions(&self) -> usize {
        self.num_actions
    }

    /// Unbounded models are rolled out until `γ^T ≤ 1e-10`.
    fn horizon(&self) -> usize {
        match self.horizon {
            Horizon::Finite(h) => h,
            Horizon::Unbounded if self.discount == 0.0 => 1,
            Horizon::Unbounded => (UNBOUNDED_TRUNCATION.ln() / self.discount.ln()).ceil() as usize,
        }
    }

    fn discount(&self) -> f64 {
        self.discount
    }

    fn sample_initial(&self, rng: &mut dyn RngCore) -> Result<usize> {
        Ok(sample_categorical(&self.initial, rng))
    }

    fn sample_next(&self, state: &usize, action: usize, rng: &mut dyn RngCore) -> Result<usize> {
        let row = self
            .transitions
            .get(*state)
            .and_then(|r| r.get(action))
            .ok_or_else(|| MdpError::EnvironmentFault(format!("no transition from ({state}, {action})")))?;
        let u = {
            let probs: Vec<f64> = row.iter().map(|&(_, p)| p).collect();
            sample_categorical(&probs, rng)
        };
        Ok(row[u].0)
    }

    fn as_tabular(&self) -> Option<&TabularMdp> {
        Some(self)
    }
}

/// Optimal policy and the optimal value of every start state.
#[derive(Debug, Clone)]
pub struct Solution {
    pub policy: MarkovPolicy,
    pub values: Vec<f64>,
}

impl Solution {
    pub fn expected_value(&self, mdp: &TabularMdp) -> f64 {
        dot(&mdp.initial, &self.values)
    }
}

/// Exact optimal control for state rewards.
///
/// Finite horizons use backward induction over T ticks and return one
/// decision rule per tick; unbounded horizons iterate to a `1e-10` sup-norm
/// residual and return a single stationary rule. Ties go to the lowest
/// action index.
pub fn value_iteration<E: Environment + ?Sized>(env: &E, reward: &[f64]) -> Result<Solution> {
    let mdp = env
        .as_tabular()
        .ok_or_else(|| MdpError::Unsupported("value iteration needs an explicit transition model".into()))?;
    solve(mdp, reward, None)
}

/// Like [`value_iteration`], but every decision rule spreads its mass
/// uniformly over all actions whose continuation value is within
/// `tolerance · max(1, |best|)` of the best.
pub fn optimal_policy_uniform_ties(mdp: &TabularMdp, reward: &[f64], tolerance: f64) -> Result<Solution> {
    solve(mdp, reward, Some(tolerance))
}

fn solve(mdp: &TabularMdp, reward: &[f64], tie_tolerance: Option<f64>) -> Result<Solution> {
    mdp.check_reward(reward)?;
    let n = mdp.num_states();
    let greedy = |values: &[f64]| -> (DecisionRule, Vec<f64>) {
        let mut best_values = Vec::with_capacity(n);
        let mut det = Vec::with_capacity(n);
        let mut stoch = Vec::new();
        for s in 0..n {
            let q: Vec<f64> = (0..mdp.num_actions).map(|a| mdp.expected_next(values, s, a)).collect();
            let (arg, best) = argmax_lowest(&q);
            best_values.push(best);
            match tie_tolerance {
                None => det.push(arg),
                Some(tol) => {
                    let slack = tol * best.abs().max(1.0);
                    let tied: Vec<bool> = q.iter().map(|&v| v >= best - slack).collect();
                    let count = tied.iter().filter(|&&t| t).count() as f64;
                    stoch.push(tied.iter().map(|&t| if t { 1.0 / count } else { 0.0 }).collect());
                }
            }
        }
        let rule = match tie_tolerance {
            None => DecisionRule::Deterministic(det),
            Some(_) => DecisionRule::Stochastic(stoch),
        };
        (rule, best_values)
    };

    match mdp.horizon {
        Horizon::Finite(horizon) => {
            let mut rules = Vec::with_capacity(horizon);
            // Last tick: every action continues nowhere, so all tie.
            let (last_rule, _) = greedy(&vec![0.0; n]);
            rules.push(last_rule);
            let mut values = reward.to_vec();
            for _ in 2..=horizon {
                let (rule, cont) = greedy(&values);
                values = (0..n).map(|s| reward[s] + mdp.discount * cont[s]).collect();
                rules.push(rule);
            }
            rules.reverse();
            Ok(Solution { policy: MarkovPolicy::new(rules, mdp.num_actions), values })
        }
        Horizon::Unbounded => {
            let mut values = reward.to_vec();
            loop {
                let (_, cont) = greedy(&values);
                let next: Vec<f64> = (0..n).map(|s| reward[s] + mdp.discount * cont[s]).collect();
                let residual = sup_distance(&next, &values);
                values = next;
                if residual <= VALUE_ITERATION_RESIDUAL {
                    break;
                }
            }
            let (rule, _) = greedy(&values);
            Ok(Solution { policy: MarkovPolicy::stationary(rule, mdp.num_actions), values })
        }
    }
}

/// Index and value of the maximum; the lowest index wins ties.
pub(crate) fn argmax_lowest(values: &[f64]) -> (usize, f64) {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    (best, values[best])
}
