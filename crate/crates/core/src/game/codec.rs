//! Text encoding of game states and touch replay.
//!
//! A state is written as `x,y,vx,vy,ax,ay,w,h,touched,[tx ty r age;...]`.

use super::{GameError, GameState, Target};
use crate::mdp::StateCodec;

pub fn encode_state(s: &GameState) -> String {
    let targets: Vec<String> = s.targets.iter().map(|t| format!("{} {} {} {}", t.x, t.y, t.radius, t.age)).collect();
    format!("{},{},{},{},{},{},{},{},{},[{}]", s.x, s.y, s.vx, s.vy, s.ax, s.ay, s.w, s.h, s.touched, targets.join(";"))
}

pub fn decode_state(text: &str) -> Result<GameState, GameError> {
    let bad = |m: String| GameError::Codec(m);
    let text = text.trim();
    let open = text.find('[').ok_or_else(|| bad("missing target list".into()))?;
    let body = text[open..]
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| bad("unterminated target list".into()))?;
    let head = text[..open].strip_suffix(',').ok_or_else(|| bad("missing separator before target list".into()))?;
    let fields: Vec<&str> = head.split(',').collect();
    if fields.len() != 9 {
        return Err(bad(format!("expected 9 scalar fields, found {}", fields.len())));
    }
    let num = |i: usize| -> Result<f64, GameError> {
        let v: f64 = fields[i].trim().parse().map_err(|_| bad(format!("bad number `{}`", fields[i])))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(bad(format!("non-finite value `{}`", fields[i])))
        }
    };
    let touched = fields[8].trim().parse().map_err(|_| bad(format!("bad touch count `{}`", fields[8])))?;
    let mut targets = Vec::new();
    for item in body.split(';').filter(|t| !t.trim().is_empty()) {
        let parts: Vec<&str> = item.split_whitespace().collect();
        if parts.len() != 4 {
            return Err(bad(format!("target `{item}` needs x y r age")));
        }
        let f = |p: &str| -> Result<f64, GameError> {
            p.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| bad(format!("bad target field `{p}`")))
        };
        let age = parts[3].parse().map_err(|_| bad(format!("bad target age `{}`", parts[3])))?;
        targets.push(Target { x: f(parts[0])?, y: f(parts[1])?, radius: f(parts[2])?, age });
    }
    Ok(GameState {
        x: num(0)?,
        y: num(1)?,
        vx: num(2)?,
        vy: num(3)?,
        ax: num(4)?,
        ay: num(5)?,
        w: num(6)?,
        h: num(7)?,
        touched,
        targets,
    })
}

impl StateCodec for GameState {
    fn encode_state(&self) -> String {
        encode_state(self)
    }

    fn decode_state(text: &str) -> Result<Self, String> {
        decode_state(text).map_err(|e| e.to_string())
    }
}

/// Touches implied by consecutive observed states: the targets of each
/// state whose disc contains the cursor of the following state.
pub fn replay_touches(states: &[GameState]) -> Vec<u32> {
    states
        .windows(2)
        .map(|w| {
            let (prev, next) = (&w[0], &w[1]);
            prev.targets.iter().filter(|t| (t.x - next.x).hypot(t.y - next.y) <= t.radius).count() as u32
        })
        .collect()
}
