//! Wire types of the HTTP API.

use std::collections::BTreeMap;
use std::fmt;

use kpirl_core::game::GameConfig;
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use uuid::Uuid;

/// What the client reports about itself when a session starts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClientMetadata {
    pub screen_width: Option<f64>,
    pub screen_height: Option<f64>,
    pub input_device: Option<String>,
    pub first_time: Option<bool>,
    /// Free-form answers (age band, gender, and so on).
    #[serde(default)]
    pub extra: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Pretest,
    Posttest,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Pretest => "pretest",
            Phase::Posttest => "posttest",
        })
    }
}

/// Reply to `POST /api/session`. `treatment` is the arm's treatment file
/// byte for byte.
#[derive(Debug, Serialize)]
pub struct SessionResponse<'a> {
    pub session_id: Uuid,
    pub arm: &'a str,
    pub config: &'a GameConfig,
    pub treatment: &'a RawValue,
}

/// One sampled frame: the client clock and the encoded game state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub t_ms: f64,
    pub state: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryUpload {
    pub session_id: Uuid,
    pub phase: Phase,
    pub observations: Vec<Observation>,
    pub client_touches: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectReason {
    UnknownSession,
    MinObservations,
    MinRate,
    AlreadyRecorded,
    Malformed,
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RejectReason::UnknownSession => "unknown-session",
            RejectReason::MinObservations => "min-observations",
            RejectReason::MinRate => "min-rate",
            RejectReason::AlreadyRecorded => "already-recorded",
            RejectReason::Malformed => "malformed",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum IngestOutcome {
    Accepted { server_touches: u32, client_touches: u32 },
    Rejected { reason: RejectReason, detail: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmSummary {
    pub arm: String,
    pub sessions: usize,
    /// Accepted trajectories.
    pub n: usize,
    pub mean_touches: Option<f64>,
    pub median_touches: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub arms: Vec<ArmSummary>,
}
