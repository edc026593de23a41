use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use super::{MdpError, Result};

/// Where a trajectory came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Source {
    Expert,
    Simulated,
    Human,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Expert => "expert",
            Source::Simulated => "simulated",
            Source::Human => "human",
        })
    }
}

impl FromStr for Source {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "expert" => Ok(Source::Expert),
            "simulated" => Ok(Source::Simulated),
            "human" => Ok(Source::Human),
            other => Err(format!("unknown source tag `{other}`")),
        }
    }
}

/// Time-ordered (state, action) observations recorded at a fixed tick rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    steps: Vec<(S, usize)>,
    tick_period: f64,
    seed: u64,
    source: Source,
}

impl<S> Trajectory<S> {
    pub fn new(steps: Vec<(S, usize)>, tick_period: f64, seed: u64, source: Source) -> Self {
        assert!(tick_period > 0.0, "tick period must be positive");
        Trajectory { steps, tick_period, seed, source }
    }

    pub fn steps(&self) -> &[(S, usize)] {
        &self.steps
    }

    pub fn states(&self) -> impl Iterator<Item = &S> {
        self.steps.iter().map(|(s, _)| s)
    }

    pub fn actions(&self) -> impl Iterator<Item = usize> + '_ {
        self.steps.iter().map(|(_, a)| *a)
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn tick_period(&self) -> f64 {
        self.tick_period
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn source(&self) -> Source {
        self.source
    }

    pub fn with_source(mut self, source: Source) -> Self {
        self.source = source;
        self
    }

    pub fn into_steps(self) -> Vec<(S, usize)> {
        self.steps
    }
}

/// Text encoding of a state inside a trajectory record. The encoding may
/// contain commas but not newlines.
pub trait StateCodec: Sized {
    fn encode_state(&self) -> String;
    fn decode_state(text: &str) -> std::result::Result<Self, String>;
}

impl StateCodec for usize {
    fn encode_state(&self) -> String {
        self.to_string()
    }
    fn decode_state(text: &str) -> std::result::Result<Self, String> {
        text.trim().parse().map_err(|e| format!("bad state index `{text}`: {e}"))
    }
}

/// Writes the header line and one `t,state,action` record per tick.
pub fn write_trajectory<S: StateCodec, W: Write>(out: &mut W, trajectory: &Trajectory<S>) -> Result<()> {
    writeln!(out, "# seed={} tick_period={} source={}", trajectory.seed, trajectory.tick_period, trajectory.source)?;
    for (t, (state, action)) in trajectory.steps.iter().enumerate() {
        writeln!(out, "{t},{},{action}", state.encode_state())?;
    }
    Ok(())
}

pub fn read_trajectory<S: StateCodec, R: BufRead>(input: R) -> Result<Trajectory<S>> {
    let mut lines = input.lines().enumerate();
    let (seed, tick_period, source) = match lines.next() {
        Some((_, line)) => parse_header(&line?)?,
        None => return Err(parse_error(1, "missing header")),
    };
    let mut steps = Vec::new();
    for (i, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i + 1;
        let (tick, rest) = line.split_once(',').ok_or_else(|| parse_error(lineno, "missing fields"))?;
        let (state, action) = rest.rsplit_once(',').ok_or_else(|| parse_error(lineno, "missing action"))?;
        let tick: usize = tick.trim().parse().map_err(|_| parse_error(lineno, "bad tick"))?;
        if tick != steps.len() {
            return Err(parse_error(lineno, &format!("expected tick {}, found {tick}", steps.len())));
        }
        let action = action.trim().parse().map_err(|_| parse_error(lineno, "bad action"))?;
        let state = S::decode_state(state).map_err(|m| parse_error(lineno, &m))?;
        steps.push((state, action));
    }
    if !(tick_period > 0.0) {
        return Err(parse_error(1, "tick period must be positive"));
    }
    Ok(Trajectory { steps, tick_period, seed, source })
}

fn parse_header(line: &str) -> Result<(u64, f64, Source)> {
    let body = line.strip_prefix('#').ok_or_else(|| parse_error(1, "header must start with `#`"))?;
    let (mut seed, mut period, mut source) = (None, None, None);
    for field in body.split_whitespace() {
        match field.split_once('=') {
            Some(("seed", v)) => seed = v.parse().ok(),
            Some(("tick_period", v)) => period = v.parse().ok(),
            Some(("source", v)) => source = v.parse().ok(),
            _ => return Err(parse_error(1, &format!("unexpected header field `{field}`"))),
        }
    }
    match (seed, period, source) {
        (Some(s), Some(p), Some(src)) => Ok((s, p, src)),
        _ => Err(parse_error(1, "header needs seed, tick_period and source")),
    }
}

fn parse_error(line: usize, message: &str) -> MdpError {
    MdpError::Parse { line, message: message.to_string() }
}
