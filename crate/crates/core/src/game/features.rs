//! Reward features of game states.

use std::f64::consts::PI;

use super::{GameError, GameState, Target};
use crate::features::{self, ExpectationForm, FeatureMap, FeatureSpace, GAME_BINS};
use crate::mdp::Trajectory;

/// Speed at which the speed bin saturates (px/tick).
const SPEED_SCALE: f64 = 48.0;
/// Acceleration at which the acceleration bin saturates (px/tick²).
const ACCEL_SCALE: f64 = 60.0;

/// Feature vector of every state without a touch.
pub const NO_TOUCH: [f64; 6] = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0];

pub fn is_no_touch(phi: &[f64]) -> bool {
    phi == NO_TOUCH
}

fn position_bin(v: f64, extent: f64) -> f64 {
    (3.0 * (v / extent)).floor().clamp(0.0, 2.0)
}

fn speed_bin(vx: f64, vy: f64) -> f64 {
    (8.0 * (vx.hypot(vy) / SPEED_SCALE)).floor().min(7.0)
}

fn accel_bin(ax: f64, ay: f64) -> f64 {
    (6.0 * (ax.hypot(ay) / ACCEL_SCALE)).floor().min(5.0)
}

/// Direction bin of the vector `(dx, dy)`: `min(7, ⌊8(atan2(−dy, −dx) + π)/2π⌋)`.
/// A zero component negates to `+0.0`, so a vector along `+x` lands in bin 7.
fn direction_bin(dx: f64, dy: f64) -> f64 {
    let angle = (0.0 - dy).atan2(0.0 - dx) + PI;
    (8.0 * angle / (2.0 * PI)).floor().clamp(0.0, 7.0)
}

/// `[1−T, T·Xp, T·Yp, T·Vm, T·Vd, T·Am]` of a state; `T` is whether the tick
/// that produced the state touched a target.
pub fn phi(state: &GameState) -> [f64; 6] {
    if state.touched == 0 {
        return NO_TOUCH;
    }
    [
        0.0,
        position_bin(state.x, state.w),
        position_bin(state.y, state.h),
        speed_bin(state.vx, state.vy),
        direction_bin(state.vx, state.vy),
        accel_bin(state.ax, state.ay),
    ]
}

/// Features shown on a target: position and heading come from the target
/// relative to the cursor, speed and acceleration from the cursor, and the
/// touch flag is set.
pub fn display_phi(state: &GameState, target: &Target) -> Result<[f64; 6], GameError> {
    if !state.targets.contains(target) {
        return Err(GameError::InvalidArgument(format!("target {target:?} is not on the field")));
    }
    Ok([
        0.0,
        position_bin(target.x, state.w),
        position_bin(target.y, state.h),
        speed_bin(state.vx, state.vy),
        direction_bin(target.x - state.x, target.y - state.y),
        accel_bin(state.ax, state.ay),
    ])
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GameFeatureMap;

impl FeatureMap<GameState> for GameFeatureMap {
    fn dim(&self) -> usize {
        6
    }

    fn features(&self, state: &GameState) -> Vec<f64> {
        phi(state).to_vec()
    }
}

/// Every reachable feature vector: all touch bin combinations plus the
/// no-touch vector.
pub fn enumerate_feature_space() -> FeatureSpace {
    let [xp, yp, vm, vd, am] = GAME_BINS;
    let mut vectors = vec![NO_TOUCH.to_vec()];
    for a in 0..xp {
        for b in 0..yp {
            for c in 0..vm {
                for d in 0..vd {
                    for e in 0..am {
                        vectors.push(vec![0.0, a as f64, b as f64, c as f64, d as f64, e as f64]);
                    }
                }
            }
        }
    }
    let n = vectors.len();
    FeatureSpace::build(vectors, n).expect("game feature vectors are finite and within capacity")
}

/// Discounted feature-form expectation over trajectories, in `phi` order.
pub fn feature_expectation(trajectories: &[Trajectory<GameState>], discount: f64) -> Result<[f64; 6], GameError> {
    let space = enumerate_feature_space();
    let mu = features::estimate_mu(trajectories, discount, ExpectationForm::Feature, &space, &GameFeatureMap)
        .map_err(|e| GameError::InvalidArgument(e.to_string()))?;
    let mut out = [0.0; 6];
    out.copy_from_slice(mu.values.as_slice());
    Ok(out)
}

/// A published feature-expectation row, in the column order
/// `[T·Xp, T·Yp, T·Vm, T·Vd, T·Am, 1−T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableRow {
    pub policy: &'static str,
    pub values: [f64; 6],
}

impl TableRow {
    /// The row reordered to `phi` order.
    pub fn as_phi_order(&self) -> [f64; 6] {
        let v = self.values;
        [v[5], v[0], v[1], v[2], v[3], v[4]]
    }
}

/// Reference feature expectations of the control, expert and learned
/// policies. Some heading entries are negative, which the heading bin
/// cannot produce; they are kept as published.
pub const TABLE3_FIXTURES: [TableRow; 7] = [
    TableRow { policy: "CT", values: [0.0132, 1.5261, 1.3745, -2.8490, 1.3078, 16.9471] },
    TableRow { policy: "EH", values: [2.0093, 1.4241, 1.1993, -0.6871, 0.6614, 22.4824] },
    TableRow { policy: "HH", values: [2.6119, 2.0059, 1.3469, 1.9244, 1.1690, 18.9064] },
    TableRow { policy: "HL", values: [2.4042, 1.8073, 1.2613, -1.1199, 0.6936, 25.2415] },
    TableRow { policy: "EL", values: [1.7452, 1.1804, 0.7979, 2.2178, 0.4558, 24.8904] },
    TableRow { policy: "LH", values: [2.6265, 1.7592, 1.3417, -1.4283, 1.2178, 19.4081] },
    TableRow { policy: "LL", values: [1.7136, 2.5636, 1.1956, -1.1634, 0.6215, 25.5276] },
];
