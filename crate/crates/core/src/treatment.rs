//! Turning a learned reward into the table shown to players.
//!
//! The raw reward of every feature vector is shifted so that not touching
//! is worth exactly zero, negative values are clipped to zero, and values
//! above the 97th percentile of touch rewards are clipped to that ceiling.
//! Displayed values are exponentially smoothed per target and drawn as a
//! fill fraction of the ceiling.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::FeatureSpace;
use crate::kpirl::KernelReward;

pub const TREATMENT_VERSION: u32 = 1;
/// Percentile of the touch rewards used as the clip ceiling.
pub const CLIP_PERCENTILE: f64 = 97.0;
/// Smoothing constant of the displayed value.
pub const SMOOTHING_ALPHA: f64 = 5.0 / 18.0;

#[derive(Debug, Error)]
pub enum TreatmentError {
    #[error("degenerate treatment: clip ceiling {ceiling} is not positive")]
    Degenerate { ceiling: f64 },
    #[error("treatment was built for feature space {found}, expected {expected}")]
    IncompatibleSpace { expected: String, found: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("malformed treatment file: {0}")]
    Format(#[from] serde_json::Error),
}

pub type Result<T, E = TreatmentError> = std::result::Result<T, E>;

/// Reward of every feature index, in space order.
pub fn tabulate(reward: &KernelReward, space: &FeatureSpace) -> Result<Vec<f64>> {
    if reward.values().len() != space.len() {
        return Err(TreatmentError::InvalidArgument(format!(
            "reward has {} entries for a space of {}",
            reward.values().len(),
            space.len()
        )));
    }
    Ok(reward.values().iter().copied().collect())
}

/// Subtracts the no-touch reward from every entry.
pub fn shift_no_touch(raw: &[f64], no_touch: usize) -> Result<Vec<f64>> {
    let base = *raw
        .get(no_touch)
        .ok_or_else(|| TreatmentError::InvalidArgument(format!("no-touch index {no_touch} out of range")))?;
    let mut shifted: Vec<f64> = raw.iter().map(|v| v - base).collect();
    shifted[no_touch] = 0.0;
    Ok(shifted)
}

/// Nearest-rank percentile: the value at rank `⌈p/100 · n⌉` of the sorted
/// sample.
pub fn nearest_rank(values: &[f64], percentile: f64) -> Result<f64> {
    if values.is_empty() || !(percentile > 0.0 && percentile <= 100.0) {
        return Err(TreatmentError::InvalidArgument("percentile of an empty sample or out of (0, 100]".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((percentile / 100.0) * sorted.len() as f64).ceil() as usize;
    Ok(sorted[rank.clamp(1, sorted.len()) - 1])
}

/// Clips negatives to zero and everything above the 97th percentile of the
/// touch entries (all but `no_touch`) to that ceiling.
pub fn clip(shifted: &[f64], no_touch: usize) -> Result<(Vec<f64>, f64)> {
    if no_touch >= shifted.len() {
        return Err(TreatmentError::InvalidArgument(format!("no-touch index {no_touch} out of range")));
    }
    let touches: Vec<f64> = shifted.iter().enumerate().filter(|&(i, _)| i != no_touch).map(|(_, &v)| v).collect();
    let ceiling = if touches.is_empty() { 0.0 } else { nearest_rank(&touches, CLIP_PERCENTILE)? };
    if !(ceiling > 0.0) {
        return Err(TreatmentError::Degenerate { ceiling });
    }
    Ok((shifted.iter().map(|v| v.clamp(0.0, ceiling)).collect(), ceiling))
}

/// All stages of the pipeline for one reward.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardTable {
    pub raw: Vec<f64>,
    pub shifted: Vec<f64>,
    pub clipped: Vec<f64>,
    pub ceiling: f64,
    pub no_touch: usize,
    /// Kernel the reward was learned with, or `unit` for the control table.
    pub kernel: String,
}

impl RewardTable {
    pub fn from_raw(raw: Vec<f64>, no_touch: usize, kernel: impl Into<String>) -> Result<Self> {
        let shifted = shift_no_touch(&raw, no_touch)?;
        let (clipped, ceiling) = clip(&shifted, no_touch)?;
        Ok(RewardTable { raw, shifted, clipped, ceiling, no_touch, kernel: kernel.into() })
    }

    pub fn from_reward(
        reward: &KernelReward,
        space: &FeatureSpace,
        no_touch: usize,
        kernel: impl Into<String>,
    ) -> Result<Self> {
        Self::from_raw(tabulate(reward, space)?, no_touch, kernel)
    }

    /// Control table: every touch is worth one point.
    pub fn unit(len: usize, no_touch: usize) -> Result<Self> {
        let mut raw = vec![1.0; len];
        if no_touch >= len {
            return Err(TreatmentError::InvalidArgument(format!("no-touch index {no_touch} out of range")));
        }
        raw[no_touch] = 0.0;
        Self::from_raw(raw, no_touch, "unit")
    }

    pub fn len(&self) -> usize {
        self.clipped.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clipped.is_empty()
    }
}

/// Per-target displayed value `R̄ ← R̄ + α(R − R̄)`, started at the first
/// value it sees.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Smoother {
    value: Option<f64>,
}

impl Smoother {
    pub fn new() -> Self {
        Smoother { value: None }
    }

    pub fn starting_at(value: f64) -> Self {
        Smoother { value: Some(value) }
    }

    pub fn value(&self) -> Option<f64> {
        self.value
    }

    pub fn update(&mut self, reward: f64) -> f64 {
        let next = match self.value {
            None => reward,
            Some(v) => v + SMOOTHING_ALPHA * (reward - v),
        };
        self.value = Some(next);
        next
    }
}

/// Share of a target drawn filled: `clamp(value / ceiling, 0, 1)`.
pub fn fill_fraction(value: f64, ceiling: f64) -> f64 {
    if ceiling > 0.0 {
        (value / ceiling).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

/// Serialized treatment, shared by the service and the game client.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreatmentFile {
    pub version: u32,
    pub kernel: String,
    pub space_hash: String,
    pub ceiling: f64,
    pub no_touch: usize,
    pub values: Vec<f64>,
}

impl TreatmentFile {
    pub fn new(table: &RewardTable, space: &FeatureSpace) -> Result<Self> {
        if table.len() != space.len() {
            return Err(TreatmentError::InvalidArgument(format!(
                "table has {} entries for a space of {}",
                table.len(),
                space.len()
            )));
        }
        Ok(TreatmentFile {
            version: TREATMENT_VERSION,
            kernel: table.kernel.clone(),
            space_hash: space.hash(),
            ceiling: table.ceiling,
            no_touch: table.no_touch,
            values: table.clipped.clone(),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses a treatment and checks it against `space`.
    pub fn from_json(text: &str, space: &FeatureSpace) -> Result<Self> {
        let file: TreatmentFile = serde_json::from_str(text)?;
        file.check(space)?;
        Ok(file)
    }

    pub fn check(&self, space: &FeatureSpace) -> Result<()> {
        let expected = space.hash();
        if self.space_hash != expected {
            return Err(TreatmentError::IncompatibleSpace { expected, found: self.space_hash.clone() });
        }
        if self.version != TREATMENT_VERSION {
            return Err(TreatmentError::InvalidArgument(format!("unsupported version {}", self.version)));
        }
        if self.values.len() != space.len() || self.no_touch >= self.values.len() {
            return Err(TreatmentError::InvalidArgument("value count or no-touch index does not fit the space".into()));
        }
        if !(self.ceiling > 0.0) || self.values.iter().any(|v| !(0.0..=self.ceiling).contains(v)) {
            return Err(TreatmentError::InvalidArgument("values outside [0, ceiling]".into()));
        }
        Ok(())
    }

    /// Clipped reward of a feature vector.
    pub fn value_of(&self, space: &FeatureSpace, phi: &[f64]) -> Option<f64> {
        space.index_of(phi).map(|i| self.values[i])
    }
}
