use rand::{Rng, RngCore};

use super::{MdpError, Result};

const PROBABILITY_TOLERANCE: f64 = 1e-12;

/// A policy maps a state (and, for Markov policies, the tick) to a
/// distribution over actions. Stationary policies ignore `tick`.
pub trait Policy<S: ?Sized> {
    fn num_actions(&self) -> usize;

    fn action_probabilities(&self, state: &S, tick: usize) -> Vec<f64>;

    fn sample_action(&self, state: &S, tick: usize, rng: &mut dyn RngCore) -> usize {
        sample_categorical(&self.action_probabilities(state, tick), rng)
    }
}

impl<S: ?Sized, P: Policy<S> + ?Sized> Policy<S> for &P {
    fn num_actions(&self) -> usize {
        (**self).num_actions()
    }
    fn action_probabilities(&self, state: &S, tick: usize) -> Vec<f64> {
        (**self).action_probabilities(state, tick)
    }
    fn sample_action(&self, state: &S, tick: usize, rng: &mut dyn RngCore) -> usize {
        (**self).sample_action(state, tick, rng)
    }
}

impl<S: ?Sized, P: Policy<S> + ?Sized> Policy<S> for Box<P> {
    fn num_actions(&self) -> usize {
        (**self).num_actions()
    }
    fn action_probabilities(&self, state: &S, tick: usize) -> Vec<f64> {
        (**self).action_probabilities(state, tick)
    }
    fn sample_action(&self, state: &S, tick: usize, rng: &mut dyn RngCore) -> usize {
        (**self).sample_action(state, tick, rng)
    }
}

/// Inverse-CDF draw. Round-off at the top of the CDF falls to the last
/// action with positive mass.
pub fn sample_categorical(probabilities: &[f64], rng: &mut dyn RngCore) -> usize {
    let u: f64 = rng.gen();
    let mut cumulative = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probabilities.iter().enumerate() {
        if p > 0.0 {
            last_positive = i;
            cumulative += p;
            if u < cumulative {
                return i;
            }
        }
    }
    last_positive
}

fn point_mass(action: usize, num_actions: usize) -> Vec<f64> {
    let mut p = vec![0.0; num_actions];
    p[action] = 1.0;
    p
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniformPolicy {
    num_actions: usize,
}

impl UniformPolicy {
    pub fn new(num_actions: usize) -> Self {
        assert!(num_actions > 0, "action set must be non-empty");
        UniformPolicy { num_actions }
    }
}

impl<S: ?Sized> Policy<S> for UniformPolicy {
    fn num_actions(&self) -> usize {
        self.num_actions
    }
    fn action_probabilities(&self, _: &S, _: usize) -> Vec<f64> {
        vec![1.0 / self.num_actions as f64; self.num_actions]
    }
    fn sample_action(&self, _: &S, _: usize, rng: &mut dyn RngCore) -> usize {
        rng.gen_range(0..self.num_actions)
    }
}

/// Stationary deterministic policy over tabular states.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DeterministicPolicy {
    actions: Vec<usize>,
    num_actions: usize,
}

impl DeterministicPolicy {
    pub fn new(actions: Vec<usize>, num_actions: usize) -> Self {
        assert!(actions.iter().all(|&a| a < num_actions));
        DeterministicPolicy { actions, num_actions }
    }

    pub fn actions(&self) -> &[usize] {
        &self.actions
    }
}

impl Policy<usize> for DeterministicPolicy {
    fn num_actions(&self) -> usize {
        self.num_actions
    }
    fn action_probabilities(&self, state: &usize, _: usize) -> Vec<f64> {
        point_mass(self.actions[*state], self.num_actions)
    }
    fn sample_action(&self, state: &usize, _: usize, _: &mut dyn RngCore) -> usize {
        self.actions[*state]
    }
}

/// Stationary stochastic policy over tabular states.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularPolicy {
    probabilities: Vec<Vec<f64>>,
}

impl TabularPolicy {
    pub fn new(probabilities: Vec<Vec<f64>>) -> Result<Self> {
        let width = probabilities.first().map_or(0, Vec::len);
        if width == 0 {
            return Err(MdpError::InvalidArgument("empty policy table".into()));
        }
        for (s, row) in probabilities.iter().enumerate() {
            let total: f64 = row.iter().sum();
            if row.len() != width || row.iter().any(|&p| p < 0.0) || (total - 1.0).abs() > PROBABILITY_TOLERANCE {
                return Err(MdpError::InvalidArgument(format!("row {s} is not a distribution over {width} actions")));
            }
        }
        Ok(TabularPolicy { probabilities })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.probabilities
    }
}

impl Policy<usize> for TabularPolicy {
    fn num_actions(&self) -> usize {
        self.probabilities[0].len()
    }
    fn action_probabilities(&self, state: &usize, _: usize) -> Vec<f64> {
        self.probabilities[*state].clone()
    }
}

/// One tick's decision rule of a [`MarkovPolicy`].
#[derive(Debug, Clone, PartialEq)]
pub enum DecisionRule {
    Deterministic(Vec<usize>),
    Stochastic(Vec<Vec<f64>>),
}

impl DecisionRule {
    fn probabilities(&self, state: usize, num_actions: usize) -> Vec<f64> {
        match self {
            DecisionRule::Deterministic(a) => point_mass(a[state], num_actions),
            DecisionRule::Stochastic(p) => p[state].clone(),
        }
    }
}

/// Tabular policy whose decision rule depends on the tick. Ticks past the
/// last rule reuse it, so a single rule is a stationary policy.
///
/// Backward induction over a finite horizon produces one of these.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovPolicy {
    rules: Vec<DecisionRule>,
    num_actions: usize,
}

impl MarkovPolicy {
    pub fn new(rules: Vec<DecisionRule>, num_actions: usize) -> Self {
        assert!(!rules.is_empty(), "a Markov policy needs at least one decision rule");
        MarkovPolicy { rules, num_actions }
    }

    pub fn stationary(rule: DecisionRule, num_actions: usize) -> Self {
        MarkovPolicy::new(vec![rule], num_actions)
    }

    pub fn rule(&self, tick: usize) -> &DecisionRule {
        &self.rules[tick.min(self.rules.len() - 1)]
    }

    pub fn rules(&self) -> &[DecisionRule] {
        &self.rules
    }

    /// Deterministic action at `(state, tick)`, if the rule is deterministic.
    pub fn action(&self, state: usize, tick: usize) -> Option<usize> {
        match self.rule(tick) {
            DecisionRule::Deterministic(a) => Some(a[state]),
            DecisionRule::Stochastic(_) => None,
        }
    }
}

impl Policy<usize> for MarkovPolicy {
    fn num_actions(&self) -> usize {
        self.num_actions
    }
    fn action_probabilities(&self, state: &usize, tick: usize) -> Vec<f64> {
        self.rule(tick).probabilities(*state, self.num_actions)
    }
    fn sample_action(&self, state: &usize, tick: usize, rng: &mut dyn RngCore) -> usize {
        match self.rule(tick) {
            DecisionRule::Deterministic(a) => a[*state],
            DecisionRule::Stochastic(p) => sample_categorical(&p[*state], rng),
        }
    }
}

/// Convex combination of base policies; one base policy is drawn per
/// episode and followed throughout it.
#[derive(Debug, Clone)]
pub struct MixedPolicy<P> {
    policies: Vec<P>,
    weights: Vec<f64>,
}

impl<P> MixedPolicy<P> {
    pub fn new(policies: Vec<P>, weights: Vec<f64>) -> Result<Self> {
        if policies.is_empty() {
            return Err(MdpError::InvalidArgument("mixed policy has no base policies".into()));
        }
        if policies.len() != weights.len() {
            return Err(MdpError::InvalidArgument(format!(
                "{} policies but {} weights",
                policies.len(),
                weights.len()
            )));
        }
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) || (total - 1.0).abs() > PROBABILITY_TOLERANCE {
            return Err(MdpError::InvalidArgument(format!(
                "weights must be non-negative and sum to 1 (sum = {total})"
            )));
        }
        Ok(MixedPolicy { policies, weights })
    }

    pub fn policies(&self) -> &[P] {
        &self.policies
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> Result<&P> {
        sample_mixed(self, rng)
    }
}

/// Draws a base policy with probability equal to its convex weight.
pub fn sample_mixed<'a, P>(mixed: &'a MixedPolicy<P>, rng: &mut dyn RngCore) -> Result<&'a P> {
    if mixed.policies.is_empty() {
        return Err(MdpError::InvalidArgument("mixed policy has no base policies".into()));
    }
    Ok(&mixed.policies[sample_categorical(&mixed.weights, rng)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::episode_rng;

    #[test]
    fn single_base_policy_always_drawn() {
        let m = MixedPolicy::new(vec!["only"], vec![1.0]).unwrap();
        let mut rng = episode_rng(1, 0);
        assert!((0..100).all(|_| *m.sample(&mut rng).unwrap() == "only"));
    }

    #[test]
    fn zero_weight_never_drawn() {
        let m = MixedPolicy::new(vec!["a", "b"], vec![1.0, 0.0]).unwrap();
        let mut rng = episode_rng(2, 0);
        assert!((0..1000).all(|_| *m.sample(&mut rng).unwrap() == "a"));
    }

    #[test]
    fn even_weights_split_evenly() {
        let m = MixedPolicy::new(vec![0usize, 1], vec![0.5, 0.5]).unwrap();
        let draws = 10_000;
        let ones: usize = (0..draws).map(|e| *m.sample(&mut episode_rng(7, e)).unwrap()).sum();
        let freq = ones as f64 / draws as f64;
        assert!((freq - 0.5).abs() <= 0.02, "frequency {freq}");
    }

    #[test]
    fn invalid_mixtures_rejected() {
        assert!(MixedPolicy::<u8>::new(vec![], vec![]).is_err());
        assert!(MixedPolicy::new(vec![1, 2], vec![0.7, 0.7]).is_err());
        assert!(MixedPolicy::new(vec![1, 2], vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn tabular_rows_must_be_distributions() {
        assert!(TabularPolicy::new(vec![vec![0.5, 0.5], vec![1.0, 0.0]]).is_ok());
        assert!(TabularPolicy::new(vec![vec![0.5, 0.6]]).is_err());
    }

    #[test]
    fn markov_policy_reuses_last_rule() {
        let p = MarkovPolicy::new(vec![DecisionRule::Deterministic(vec![1]), DecisionRule::Deterministic(vec![0])], 2);
        assert_eq!(p.action(0, 0), Some(1));
        assert_eq!(p.action(0, 1), Some(0));
        assert_eq!(p.action(0, 50), Some(0));
    }
}
