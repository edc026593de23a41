//! Forward solver for generative environments: DEI for the policy and
//! Monte Carlo rollouts for its visitation expectation.

use std::error::Error as StdError;

use nalgebra::DVector;
use rayon::prelude::*;

use crate::dei::{run_dei, DeiConfig, DeiEnvironment, GreedyQPolicy};
use crate::features::{estimate_mu, ExpectationForm, FeatureMap, FeatureSpace};
use crate::kpirl::{ForwardSolver, KernelReward};
use crate::mdp::{rollout_episode, Trajectory};

/// States whose features fall outside the space earn zero reward during
/// training; estimating `μ` on such a state is an error.
pub struct SampledSolver<'a, E, M: ?Sized> {
    pub env: E,
    pub map: &'a M,
    pub space: &'a FeatureSpace,
    pub dei: DeiConfig,
    /// Rollouts used to estimate `μ` of each solved policy.
    pub evaluation_episodes: usize,
    pub seed: u64,
}

impl<'a, E, M> SampledSolver<'a, E, M>
where
    E: DeiEnvironment + Clone + Send + Sync,
    E::State: Send + Sync,
    E::Key: Send + Sync,
    M: FeatureMap<E::State> + Sync + ?Sized,
{
    pub fn new(
        env: E,
        map: &'a M,
        space: &'a FeatureSpace,
        dei: DeiConfig,
        evaluation_episodes: usize,
        seed: u64,
    ) -> Self {
        SampledSolver { env, map, space, dei, evaluation_episodes, seed }
    }

    /// Seed used for both the DEI run and the evaluation rollouts of an
    /// iteration.
    pub fn iteration_seed(&self, iteration: usize) -> u64 {
        self.seed.wrapping_add((iteration as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
    }

    pub fn reward_fn<'r>(&'r self, reward: &'r KernelReward) -> impl Fn(&E::State) -> f64 + Sync + 'r {
        move |s: &E::State| self.space.index_of(&self.map.features(s)).map_or(0.0, |i| reward.value(i))
    }

    pub fn evaluate(
        &self,
        policy: &GreedyQPolicy<E>,
        seed: u64,
    ) -> Result<(DVector<f64>, Vec<Trajectory<E::State>>), Box<dyn StdError + Send + Sync>> {
        let trajectories = (0..self.evaluation_episodes as u64)
            .into_par_iter()
            .map(|m| rollout_episode(&self.env, policy, seed, m))
            .collect::<Result<Vec<_>, _>>()?;
        let mu = estimate_mu(&trajectories, self.env.discount(), ExpectationForm::Visitation, self.space, self.map)?;
        Ok((mu.values, trajectories))
    }
}

impl<E, M> ForwardSolver for SampledSolver<'_, E, M>
where
    E: DeiEnvironment + Clone + Send + Sync,
    E::State: Send + Sync,
    E::Key: Send + Sync,
    M: FeatureMap<E::State> + Sync + ?Sized,
{
    type Policy = GreedyQPolicy<E>;

    fn solve(
        &mut self,
        reward: &KernelReward,
        iteration: usize,
    ) -> Result<(GreedyQPolicy<E>, DVector<f64>), Box<dyn StdError + Send + Sync>> {
        let seed = self.iteration_seed(iteration);
        let outcome = run_dei(&self.env, &self.reward_fn(reward), &self.dei, seed)?;
        let (mu, _) = self.evaluate(&outcome.policy, seed ^ 0xA5A5_A5A5)?;
        Ok((outcome.policy, mu))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dei::{Exploration, Stepsize};
    use crate::envs::chain_mdp;
    use crate::features::gram_matrix;
    use crate::features::KernelKind;
    use crate::kpirl::reward_from_alpha;

    struct Index;
    impl FeatureMap<usize> for Index {
        fn dim(&self) -> usize {
            1
        }
        fn features(&self, s: &usize) -> Vec<f64> {
            vec![*s as f64]
        }
    }

    #[test]
    fn chain_solver_reaches_rewarded_end() {
        let mdp = chain_mdp(4, 0.0, 0.9, 12).unwrap();
        let space = FeatureSpace::from_states(&[0usize, 1, 2, 3], &Index, 4).unwrap();
        let kernel = gram_matrix(
            KernelKind::Dot,
            &FeatureSpace::build(
                (0..4).map(|i| {
                    let mut v = vec![0.0; 4];
                    v[i] = 1.0;
                    v
                }),
                4,
            )
            .unwrap(),
        )
        .unwrap();
        let reward = reward_from_alpha(DVector::from_vec(vec![0.0, 0.0, 0.0, 1.0]), &kernel).unwrap();
        let dei = DeiConfig {
            iterations: 4,
            episodes: 20,
            horizon: 12,
            window: 6,
            stepsize: Stepsize::default(),
            exploration: Exploration::Uniform,
            budget: 10_000,
        };
        let mut solver = SampledSolver::new(mdp, &Index, &space, dei, 50, 3);
        let (policy, mu) = solver.solve(&reward, 1).unwrap();
        assert_eq!(policy.action(&0), 1);
        // Deterministic chain: three ticks to reach the end, then absorbed.
        let expected_last: f64 = (3..12).map(|t| 0.9f64.powi(t)).sum();
        assert!((mu[3] - expected_last).abs() < 1e-9, "{}", mu[3]);
        let (_, again) = solver.solve(&reward, 1).unwrap();
        assert_eq!(mu, again);
    }
}
