//! Small benchmark environments for the forward solver.

use rand::{Rng, RngCore};

use crate::dei::DeiEnvironment;
use crate::mdp::{Environment, Horizon, MdpError, Result, TabularMdp};

/// Chain of `len` states. Action 1 advances and action 0 steps back; with
/// probability `slip` the opposite move happens. The last state is
/// absorbing and episodes start in state 0.
pub fn chain_mdp(len: usize, slip: f64, discount: f64, horizon: usize) -> Result<TabularMdp> {
    if len < 2 || !(0.0..=1.0).contains(&slip) {
        return Err(MdpError::InvalidArgument("chain needs len >= 2 and slip in [0, 1]".into()));
    }
    let last = len - 1;
    let transitions = (0..len)
        .map(|s| {
            if s == last {
                return vec![vec![(last, 1.0)]; 2];
            }
            let back = s.saturating_sub(1);
            let fwd = s + 1;
            let row = |intended: usize, other: usize| {
                if intended == other {
                    vec![(intended, 1.0)]
                } else {
                    vec![(intended, 1.0 - slip), (other, slip)]
                }
            };
            vec![row(back, fwd), row(fwd, back)]
        })
        .collect();
    let mut initial = vec![0.0; len];
    initial[0] = 1.0;
    TabularMdp::new(transitions, initial, discount, Horizon::Finite(horizon))
}

/// Reward 1 in the last chain state.
pub fn chain_reward(len: usize) -> Vec<f64> {
    let mut r = vec![0.0; len];
    r[len - 1] = 1.0;
    r
}

/// Pole-balancing state `(x, ẋ, θ, θ̇)`; `fallen` is absorbing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CartPoleState {
    pub x: f64,
    pub x_dot: f64,
    pub theta: f64,
    pub theta_dot: f64,
    pub fallen: bool,
}

/// Classic cart-pole with Euler integration. Action 0 pushes left, 1 pushes
/// right. Undiscounted: the return is the number of upright ticks.
#[derive(Debug, Clone)]
pub struct CartPole {
    pub episode_length: usize,
}

impl CartPole {
    const GRAVITY: f64 = 9.8;
    const MASS_CART: f64 = 1.0;
    const MASS_POLE: f64 = 0.1;
    const HALF_LENGTH: f64 = 0.5;
    const FORCE: f64 = 10.0;
    const TAU: f64 = 0.02;
    pub const THETA_LIMIT: f64 = 12.0 * 2.0 * std::f64::consts::PI / 360.0;
    pub const X_LIMIT: f64 = 2.4;

    pub fn new(episode_length: usize) -> Self {
        CartPole { episode_length }
    }

    pub fn step(state: &CartPoleState, action: usize) -> CartPoleState {
        if state.fallen {
            return *state;
        }
        let total_mass = Self::MASS_CART + Self::MASS_POLE;
        let pole_moment = Self::MASS_POLE * Self::HALF_LENGTH;
        let force = if action == 1 { Self::FORCE } else { -Self::FORCE };
        let (sin, cos) = state.theta.sin_cos();
        let temp = (force + pole_moment * state.theta_dot.powi(2) * sin) / total_mass;
        let theta_acc = (Self::GRAVITY * sin - cos * temp)
            / (Self::HALF_LENGTH * (4.0 / 3.0 - Self::MASS_POLE * cos * cos / total_mass));
        let x_acc = temp - pole_moment * theta_acc * cos / total_mass;
        let x = state.x + Self::TAU * state.x_dot;
        let x_dot = state.x_dot + Self::TAU * x_acc;
        let theta = state.theta + Self::TAU * state.theta_dot;
        let theta_dot = state.theta_dot + Self::TAU * theta_acc;
        let fallen = x.abs() > Self::X_LIMIT || theta.abs() > Self::THETA_LIMIT;
        CartPoleState { x, x_dot, theta, theta_dot, fallen }
    }

    /// 1 while the pole is up.
    pub fn reward(state: &CartPoleState) -> f64 {
        if state.fallen {
            0.0
        } else {
            1.0
        }
    }
}

fn bin(value: f64, limit: f64, bins: usize) -> u8 {
    let u = ((value + limit) / (2.0 * limit)).clamp(0.0, 1.0 - 1e-12);
    (u * bins as f64) as u8
}

impl Environment for CartPole {
    type State = CartPoleState;

    fn num_actions(&self) -> usize {
        2
    }

    fn horizon(&self) -> usize {
        self.episode_length
    }

    fn discount(&self) -> f64 {
        1.0
    }

    fn tick_period(&self) -> f64 {
        Self::TAU
    }

    fn sample_initial(&self, rng: &mut dyn RngCore) -> Result<CartPoleState> {
        let mut u = || rng.gen_range(-0.05..0.05);
        Ok(CartPoleState { x: u(), x_dot: u(), theta: u(), theta_dot: u(), fallen: false })
    }

    fn sample_next(&self, state: &CartPoleState, action: usize, _: &mut dyn RngCore) -> Result<CartPoleState> {
        Ok(CartPole::step(state, action))
    }
}

impl DeiEnvironment for CartPole {
    /// Discretized `(x, ẋ, θ, θ̇)` plus the action; fallen states share one key.
    type Key = ([u8; 4], usize);

    fn q_key(&self, s: &CartPoleState, action: usize) -> Self::Key {
        if s.fallen {
            return ([u8::MAX; 4], action);
        }
        let b = [
            bin(s.x, Self::X_LIMIT, 3),
            bin(s.x_dot, 1.5, 3),
            bin(s.theta, Self::THETA_LIMIT, 6),
            bin(s.theta_dot, 2.0, 6),
        ];
        (b, action)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{episode_rng, policy_value_mc, UniformPolicy};

    #[test]
    fn chain_structure() {
        let c = chain_mdp(5, 0.1, 0.9, 20).unwrap();
        assert_eq!(c.transitions(0, 1), &[(1, 0.9), (0, 0.1)]);
        assert_eq!(c.transitions(0, 0), &[(0, 0.9), (1, 0.1)]);
        assert_eq!(c.transitions(4, 0), &[(4, 1.0)]);
        assert!(chain_mdp(1, 0.1, 0.9, 20).is_err());
    }

    #[test]
    fn cartpole_falls_under_constant_push() {
        let env = CartPole::new(200);
        let mut s = env.sample_initial(&mut episode_rng(0, 0)).unwrap();
        let mut ticks = 0;
        while !s.fallen && ticks < 200 {
            s = CartPole::step(&s, 1);
            ticks += 1;
        }
        assert!(s.fallen && ticks < 60, "fell after {ticks}");
        assert_eq!(CartPole::step(&s, 0), s);
    }

    #[test]
    fn random_policy_balances_briefly() {
        let env = CartPole::new(40);
        let est = policy_value_mc(&env, &CartPole::reward, &UniformPolicy::new(2), 500, 1).unwrap();
        assert!(est.mean > 10.0 && est.mean < 35.0, "{}", est.mean);
    }
}
