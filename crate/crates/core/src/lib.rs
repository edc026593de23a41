//! Kernel projection inverse reinforcement learning and the machinery around it.
//!
//! The crate is organised bottom-up:
//!
//! - [`mdp`]: the generative MDP interface, seeded rollouts, policies and the
//!   exact tabular solvers used as oracles.
//! - [`features`]: finite feature images, visitation expectations, kernels and
//!   Gram matrices.
//! - [`kpirl`]: the kernel projection loop (PIRL is the dot-product case).
//! - [`dei`]: direct estimate iteration, a windowed-return policy iteration
//!   scheme used as the forward solver on sampled environments.
//! - [`gridworld`]: random gridworld generation and the benchmark protocol.
//! - [`game`]: the 15 second target-touch game as an MDP.
//! - [`treatment`]: post-processing of learned rewards into display tables.
//! - [`envs`]: small benchmark environments (chain, cart-pole).

pub mod dei;
pub mod envs;
pub mod features;
pub mod game;
pub mod gridworld;
pub mod kpirl;
pub mod mdp;
pub mod sampled;
pub mod treatment;

pub use features::{FeatureSpace, Kernel, KernelKind};
pub use kpirl::{KernelReward, KpirlConfig, KpirlRun};
pub use mdp::{Environment, Policy, Trajectory};
