//! The 15 second target-touch game as an MDP.
//!
//! The cursor is driven by 400 velocity-target actions on a 20×20 grid.
//! Each tick the cursor accelerates towards the chosen velocity (bounded
//! acceleration), moves, touches any present target whose disc contains it,
//! targets age and expire, and new targets spawn by a per-tick Poisson draw.

mod codec;
mod features;

pub use codec::{decode_state, encode_state, replay_touches};
pub use features::{
    display_phi, enumerate_feature_space, feature_expectation, is_no_touch, phi, GameFeatureMap, TableRow, NO_TOUCH,
    TABLE3_FIXTURES,
};

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dei::DeiEnvironment;
use crate::mdp::{Environment, MdpError, Policy};

#[derive(Debug, Error)]
pub enum GameError {
    #[error("invalid game configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("malformed game state: {0}")]
    Codec(String),
}

impl From<GameError> for MdpError {
    fn from(e: GameError) -> Self {
        MdpError::EnvironmentFault(e.to_string())
    }
}

/// Side of the velocity-target action grid.
pub const ACTION_GRID: usize = 20;
pub const NUM_ACTIONS: usize = ACTION_GRID * ACTION_GRID;
/// Action whose velocity target is zero.
pub const ZERO_ACTION: usize = (ACTION_GRID / 2) * ACTION_GRID + ACTION_GRID / 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GameConfig {
    pub width: f64,
    pub height: f64,
    pub duration_s: f64,
    pub tick_rate_hz: f64,
    /// Targets per second.
    pub spawn_rate: f64,
    pub lifespan_ticks: u32,
    /// Target disc area over field area.
    pub area_fraction: f64,
    pub margin: f64,
    pub discount: f64,
    /// Speed at which the speed feature saturates (px/tick); also bounds the
    /// action grid.
    pub max_speed: f64,
    /// Acceleration bound (px/tick²).
    pub max_accel: f64,
}

impl Default for GameConfig {
    fn default() -> Self {
        GameConfig {
            width: 1280.0,
            height: 720.0,
            duration_s: 15.0,
            tick_rate_hz: 30.0,
            spawn_rate: 5.0,
            lifespan_ticks: 30,
            area_fraction: 0.0157,
            margin: 5.0,
            discount: 0.95,
            max_speed: 48.0,
            max_accel: 60.0,
        }
    }
}

impl GameConfig {
    pub fn validate(&self) -> Result<(), GameError> {
        let bad = |m: String| Err(GameError::InvalidConfig(m));
        if !(self.width > 0.0 && self.height > 0.0) {
            return bad(format!("field {}×{}", self.width, self.height));
        }
        if !(self.area_fraction > 0.0 && self.area_fraction < 1.0) {
            return bad(format!("area fraction {}", self.area_fraction));
        }
        let horizon = self.duration_s * self.tick_rate_hz;
        if !(horizon >= 1.0) || (horizon - horizon.round()).abs() > 1e-9 {
            return bad(format!("duration × tick rate = {horizon} is not a whole number of ticks"));
        }
        if 2.0 * (self.margin + self.radius()) >= self.width.min(self.height) {
            return bad("targets do not fit inside the margins".into());
        }
        if !(self.spawn_rate >= 0.0) || self.lifespan_ticks == 0 || !(0.0..1.0).contains(&self.discount) {
            return bad("spawn rate, lifespan or discount out of range".into());
        }
        Ok(())
    }

    pub fn horizon(&self) -> usize {
        (self.duration_s * self.tick_rate_hz).round() as usize
    }

    /// `sqrt(area_fraction · w · h / π)`.
    pub fn radius(&self) -> f64 {
        (self.area_fraction * self.width * self.height / std::f64::consts::PI).sqrt()
    }

    /// Velocity target of an action, in px/tick.
    pub fn action_velocity(&self, action: usize) -> (f64, f64) {
        let step = self.max_speed / (ACTION_GRID / 2) as f64;
        let (i, j) = (action / ACTION_GRID, action % ACTION_GRID);
        (step * (i as f64 - 10.0), step * (j as f64 - 10.0))
    }

    /// Action whose velocity target is closest to `(vx, vy)`.
    pub fn nearest_action(&self, vx: f64, vy: f64) -> usize {
        let step = self.max_speed / (ACTION_GRID / 2) as f64;
        let index = |v: f64| ((v / step).round() + 10.0).clamp(0.0, (ACTION_GRID - 1) as f64) as usize;
        index(vx) * ACTION_GRID + index(vy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Target {
    pub x: f64,
    pub y: f64,
    pub radius: f64,
    pub age: u32,
}

/// `[x, y, ẋ, ẏ, ẍ, ÿ, w, h, 𝐭]` plus the number of targets touched on the
/// tick that produced this state.
#[derive(Debug, Clone, PartialEq)]
pub struct GameState {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub ax: f64,
    pub ay: f64,
    pub w: f64,
    pub h: f64,
    pub touched: u32,
    pub targets: Vec<Target>,
}

/// What happened during one tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StepEvents {
    pub spawned: u32,
    pub touched: u32,
    pub expired: u32,
}

#[derive(Debug, Clone)]
pub struct Game {
    config: GameConfig,
    spawn: Option<Poisson<f64>>,
}

impl Game {
    pub fn new(config: GameConfig) -> Result<Self, GameError> {
        config.validate()?;
        let mean = config.spawn_rate / config.tick_rate_hz;
        let spawn = if mean > 0.0 {
            Some(Poisson::new(mean).map_err(|e| GameError::InvalidConfig(e.to_string()))?)
        } else {
            None
        };
        Ok(Game { config, spawn })
    }

    pub fn config(&self) -> &GameConfig {
        &self.config
    }

    /// Cursor at rest in the centre; the first spawn draw already applies.
    pub fn initial_state(&self, rng: &mut dyn RngCore) -> (GameState, StepEvents) {
        let c = &self.config;
        let mut state = GameState {
            x: c.width / 2.0,
            y: c.height / 2.0,
            vx: 0.0,
            vy: 0.0,
            ax: 0.0,
            ay: 0.0,
            w: c.width,
            h: c.height,
            touched: 0,
            targets: Vec::new(),
        };
        let spawned = self.spawn_targets(&mut state, rng);
        (state, StepEvents { spawned, ..Default::default() })
    }

    fn spawn_targets(&self, state: &mut GameState, rng: &mut dyn RngCore) -> u32 {
        let Some(poisson) = &self.spawn else { return 0 };
        let count = poisson.sample(rng) as u32;
        let r = self.config.radius();
        let lo = self.config.margin + r;
        for _ in 0..count {
            let x = rng.gen_range(lo..=state.w - lo);
            let y = rng.gen_range(lo..=state.h - lo);
            state.targets.push(Target { x, y, radius: r, age: 0 });
        }
        count
    }

    /// Cursor kinematics after `action`, before any target bookkeeping.
    pub fn kinematics(&self, state: &GameState, action: usize) -> GameState {
        let (tvx, tvy) = self.config.action_velocity(action);
        let (mut ax, mut ay) = (tvx - state.vx, tvy - state.vy);
        let norm = ax.hypot(ay);
        if norm > self.config.max_accel {
            ax *= self.config.max_accel / norm;
            ay *= self.config.max_accel / norm;
        }
        let (mut vx, mut vy) = (state.vx + ax, state.vy + ay);
        let (mut x, mut y) = (state.x + vx, state.y + vy);
        if !(0.0..=state.w).contains(&x) {
            x = x.clamp(0.0, state.w);
            vx = 0.0;
        }
        if !(0.0..=state.h).contains(&y) {
            y = y.clamp(0.0, state.h);
            vy = 0.0;
        }
        GameState { x, y, vx, vy, ax, ay, touched: 0, ..state.clone() }
    }

    pub fn step_with_events(&self, state: &GameState, action: usize, rng: &mut dyn RngCore) -> (GameState, StepEvents) {
        let mut next = self.kinematics(state, action);
        let before = next.targets.len();
        next.targets.retain(|t| (t.x - next.x).hypot(t.y - next.y) > t.radius);
        let touched = (before - next.targets.len()) as u32;
        next.touched = touched;
        let lifespan = self.config.lifespan_ticks;
        next.targets.iter_mut().for_each(|t| t.age += 1);
        let alive = next.targets.len();
        next.targets.retain(|t| t.age < lifespan);
        let expired = (alive - next.targets.len()) as u32;
        let spawned = self.spawn_targets(&mut next, rng);
        (next, StepEvents { spawned, touched, expired })
    }

    pub fn step(&self, state: &GameState, action: usize, rng: &mut dyn RngCore) -> GameState {
        self.step_with_events(state, action, rng).0
    }
}

impl Environment for Game {
    type State = GameState;

    fn num_actions(&self) -> usize {
        NUM_ACTIONS
    }

    fn horizon(&self) -> usize {
        self.config.horizon()
    }

    fn discount(&self) -> f64 {
        self.config.discount
    }

    fn tick_period(&self) -> f64 {
        1.0 / self.config.tick_rate_hz
    }

    fn sample_initial(&self, rng: &mut dyn RngCore) -> crate::mdp::Result<GameState> {
        Ok(self.initial_state(rng).0)
    }

    fn sample_next(&self, state: &GameState, action: usize, rng: &mut dyn RngCore) -> crate::mdp::Result<GameState> {
        if action >= NUM_ACTIONS {
            return Err(MdpError::EnvironmentFault(format!("action {action} out of range")));
        }
        Ok(self.step(state, action, rng))
    }
}

/// Discretized post-decision state: the cursor after the action's
/// kinematics, described relative to the nearest target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PostDecisionKey {
    /// Angle between the new velocity and the direction to the nearest
    /// target in 8 sectors, sector 0 centred on straight ahead; 8 when the
    /// cursor is at rest.
    pub heading: u8,
    /// Speed in 4 bins up to the saturation speed.
    pub speed: u8,
    /// Distance to the nearest target in radii, binned by `DISTANCE_EDGES`.
    pub distance: u8,
    pub has_target: bool,
}

/// Bin edges, in target radii, of the distance in [`PostDecisionKey`].
pub const DISTANCE_EDGES: [f64; 11] = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0, 13.0, 16.0, 20.0];

pub fn post_decision_key(game: &Game, state: &GameState, action: usize) -> PostDecisionKey {
    let post = game.kinematics(state, action);
    let speed = post.vx.hypot(post.vy);
    let speed_bin = ((4.0 * speed / game.config.max_speed) as u8).min(3);
    let nearest = post
        .targets
        .iter()
        .map(|t| (t.x - post.x, t.y - post.y, t.radius))
        .min_by(|a, b| a.0.hypot(a.1).total_cmp(&b.0.hypot(b.1)));
    match nearest {
        None => PostDecisionKey { heading: 0, speed: speed_bin, distance: 0, has_target: false },
        Some((dx, dy, r)) => {
            let d = dx.hypot(dy) / r;
            let distance = DISTANCE_EDGES.iter().take_while(|&&e| d >= e).count() as u8;
            let heading = if speed == 0.0 {
                8
            } else {
                let sector = std::f64::consts::FRAC_PI_4;
                let rel = (dy.atan2(dx) - post.vy.atan2(post.vx) + sector / 2.0).rem_euclid(2.0 * std::f64::consts::PI);
                ((rel / sector) as u8).min(7)
            };
            PostDecisionKey { heading, speed: speed_bin, distance, has_target: true }
        }
    }
}

/// The game with an optional set of start states drawn uniformly (used to
/// start training episodes from observed expert states).
#[derive(Debug, Clone)]
pub struct GameEnv {
    pub game: Game,
    pub starts: Option<std::sync::Arc<Vec<GameState>>>,
    pub horizon: usize,
}

impl GameEnv {
    pub fn new(game: Game) -> Self {
        let horizon = game.config().horizon();
        GameEnv { game, starts: None, horizon }
    }

    pub fn with_starts(mut self, starts: Vec<GameState>) -> Result<Self, GameError> {
        if starts.is_empty() {
            return Err(GameError::InvalidArgument("empty start-state set".into()));
        }
        self.starts = Some(std::sync::Arc::new(starts));
        Ok(self)
    }

    pub fn with_horizon(mut self, horizon: usize) -> Self {
        self.horizon = horizon;
        self
    }
}

impl Environment for GameEnv {
    type State = GameState;

    fn num_actions(&self) -> usize {
        NUM_ACTIONS
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn discount(&self) -> f64 {
        self.game.discount()
    }

    fn tick_period(&self) -> f64 {
        self.game.tick_period()
    }

    fn sample_initial(&self, rng: &mut dyn RngCore) -> crate::mdp::Result<GameState> {
        match &self.starts {
            Some(s) => Ok(s[rng.gen_range(0..s.len())].clone()),
            None => self.game.sample_initial(rng),
        }
    }

    fn sample_next(&self, state: &GameState, action: usize, rng: &mut dyn RngCore) -> crate::mdp::Result<GameState> {
        self.game.sample_next(state, action, rng)
    }
}

impl DeiEnvironment for GameEnv {
    type Key = PostDecisionKey;

    fn q_key(&self, state: &GameState, action: usize) -> PostDecisionKey {
        post_decision_key(&self.game, state, action)
    }
}

/// Heuristic baseline: the action whose next position is closest to any
/// live target, or the zero action when there is none.
#[derive(Debug, Clone)]
pub struct ChasePolicy {
    game: Game,
}

impl ChasePolicy {
    pub fn new(game: Game) -> Self {
        ChasePolicy { game }
    }

    pub fn action(&self, state: &GameState) -> usize {
        if state.targets.is_empty() {
            return ZERO_ACTION;
        }
        let gap = |a: usize| {
            let next = self.game.kinematics(state, a);
            state.targets.iter().map(|t| (t.x - next.x).hypot(t.y - next.y)).fold(f64::INFINITY, f64::min)
        };
        (0..NUM_ACTIONS).min_by(|&a, &b| gap(a).total_cmp(&gap(b))).unwrap_or(ZERO_ACTION)
    }
}

impl Policy<GameState> for ChasePolicy {
    fn num_actions(&self) -> usize {
        NUM_ACTIONS
    }

    fn action_probabilities(&self, state: &GameState, _tick: usize) -> Vec<f64> {
        let mut p = vec![0.0; NUM_ACTIONS];
        p[self.action(state)] = 1.0;
        p
    }

    fn sample_action(&self, state: &GameState, _tick: usize, _rng: &mut dyn RngCore) -> usize {
        self.action(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::episode_rng;
    use approx::assert_abs_diff_eq;

    fn quiet_game() -> Game {
        Game::new(GameConfig { spawn_rate: 0.0, ..Default::default() }).unwrap()
    }

    #[test]
    fn area_fraction_holds() {
        for (w, h) in [(1280.0, 720.0), (800.0, 600.0), (1920.0, 1080.0)] {
            let c = GameConfig { width: w, height: h, ..Default::default() };
            let r = c.radius();
            assert_abs_diff_eq!(std::f64::consts::PI * r * r / (w * h), 0.0157, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_action_without_targets_is_stationary() {
        let g = quiet_game();
        let mut rng = episode_rng(0, 0);
        let (s, _) = g.initial_state(&mut rng);
        let next = g.step(&s, ZERO_ACTION, &mut rng);
        assert_eq!((next.x, next.y, next.vx, next.vy), (s.x, s.y, 0.0, 0.0));
        assert_eq!(g.config().action_velocity(ZERO_ACTION), (0.0, 0.0));
    }

    #[test]
    fn old_targets_expire() {
        let g = quiet_game();
        let (mut s, _) = g.initial_state(&mut episode_rng(0, 0));
        s.targets.push(Target { x: 50.0, y: 50.0, radius: g.config().radius(), age: 29 });
        s.targets.push(Target { x: 60.0, y: 600.0, radius: g.config().radius(), age: 3 });
        let (next, ev) = g.step_with_events(&s, ZERO_ACTION, &mut episode_rng(0, 1));
        assert_eq!(ev.expired, 1);
        assert_eq!(next.targets.len(), 1);
        assert_eq!(next.targets[0].age, 4);
    }

    #[test]
    fn touching_removes_target_once() {
        let g = quiet_game();
        let (mut s, _) = g.initial_state(&mut episode_rng(0, 0));
        s.targets.push(Target { x: s.x, y: s.y, radius: g.config().radius(), age: 0 });
        let (next, ev) = g.step_with_events(&s, ZERO_ACTION, &mut episode_rng(0, 1));
        assert_eq!((ev.touched, next.touched), (1, 1));
        assert!(next.targets.is_empty());
        let again = g.step(&next, ZERO_ACTION, &mut episode_rng(0, 2));
        assert_eq!(again.touched, 0);
    }

    #[test]
    fn acceleration_is_bounded_and_walls_stop() {
        let g = quiet_game();
        let (s, _) = g.initial_state(&mut episode_rng(0, 0));
        let next = g.kinematics(&s, 0);
        assert_abs_diff_eq!(next.ax.hypot(next.ay), 60.0, epsilon = 1e-9);
        let mut at_wall = s.clone();
        at_wall.x = 1.0;
        let next = g.kinematics(&at_wall, 0);
        assert_eq!((next.x, next.vx), (0.0, 0.0));
    }

    #[test]
    fn spawns_respect_margins() {
        let g = Game::new(GameConfig { spawn_rate: 300.0, ..Default::default() }).unwrap();
        let (s, _) = g.initial_state(&mut episode_rng(2, 0));
        assert!(!s.targets.is_empty());
        for t in &s.targets {
            assert!(t.x - t.radius >= 5.0 && t.x + t.radius <= s.w - 5.0);
            assert!(t.y - t.radius >= 5.0 && t.y + t.radius <= s.h - 5.0);
        }
    }

    #[test]
    fn post_decision_key_sees_nearest_target() {
        let g = quiet_game();
        let (mut s, _) = g.initial_state(&mut episode_rng(0, 0));
        assert!(!post_decision_key(&g, &s, ZERO_ACTION).has_target);
        s.targets.push(Target { x: s.x + 200.0, y: s.y, radius: g.config().radius(), age: 0 });
        let right = post_decision_key(&g, &s, 19 * ACTION_GRID + 10);
        let left = post_decision_key(&g, &s, 0 * ACTION_GRID + 10);
        assert_eq!(right.heading, 0);
        assert_eq!(left.heading, 4);
        assert_eq!(post_decision_key(&g, &s, ZERO_ACTION).heading, 8);
    }

    #[test]
    fn nearest_action_inverts_action_velocity() {
        let c = GameConfig::default();
        for a in 0..NUM_ACTIONS {
            let (vx, vy) = c.action_velocity(a);
            assert_eq!(c.nearest_action(vx + 1.0, vy - 1.0), a);
        }
        assert_eq!(c.nearest_action(500.0, -500.0), 19 * ACTION_GRID);
    }

    #[test]
    fn invalid_configs_rejected() {
        assert!(Game::new(GameConfig { area_fraction: 1.5, ..Default::default() }).is_err());
        assert!(Game::new(GameConfig { duration_s: 15.01, ..Default::default() }).is_err());
        assert!(Game::new(GameConfig { width: 20.0, ..Default::default() }).is_err());
    }
}
