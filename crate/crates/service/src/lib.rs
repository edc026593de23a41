//! Session service for treatment experiments.
//!
//! Players open a session and are assigned uniformly at random to an arm;
//! the reply carries the game configuration and the arm's treatment file.
//! After each game the client uploads its 30 Hz observations. Uploads that
//! are too short or sampled too slowly are rejected; accepted ones are
//! replayed through the game's touch detector and appended to the store.

pub mod http;
pub mod model;
pub mod store;

use std::path::PathBuf;
use std::sync::Mutex;

use chrono::Utc;
use kpirl_core::features::FeatureSpace;
use kpirl_core::game::{decode_state, enumerate_feature_space, replay_touches, GameConfig, GameState};
use kpirl_core::mdp::{Source, Trajectory};
use kpirl_core::treatment::{RewardTable, TreatmentError, TreatmentFile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde_json::value::RawValue;
use thiserror::Error;
use uuid::Uuid;

use model::{ArmSummary, ClientMetadata, IngestOutcome, Phase, RejectReason, Summary, TrajectoryUpload};
use store::{Record, SessionRecord, Store, TrajectoryRecord};

pub use http::router;

pub const CONTROL_ARM: &str = "control";
pub const MIN_OBSERVATIONS: usize = 420;
pub const MIN_RATE_HZ: f64 = 20.0;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("service configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Treatment(#[from] TreatmentError),
    #[error("store: {0}")]
    Store(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// A named arm and the treatment its players see.
#[derive(Debug, Clone)]
pub struct ArmSpec {
    pub name: String,
    pub treatment: TreatmentFile,
}

impl ArmSpec {
    /// The control arm: every touch is worth one point.
    pub fn control(space: &FeatureSpace) -> Result<Self, ServiceError> {
        let no_touch = space
            .index_of(&kpirl_core::game::NO_TOUCH)
            .ok_or_else(|| ServiceError::Config("feature space has no no-touch vector".into()))?;
        let table = RewardTable::unit(space.len(), no_touch)?;
        Ok(ArmSpec { name: CONTROL_ARM.into(), treatment: TreatmentFile::new(&table, space)? })
    }
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub arms: Vec<ArmSpec>,
    pub seed: u64,
    pub data_dir: PathBuf,
    pub game: GameConfig,
    pub min_observations: usize,
    pub min_rate_hz: f64,
}

impl ServiceConfig {
    pub fn new(arms: Vec<ArmSpec>, seed: u64, data_dir: impl Into<PathBuf>) -> Self {
        ServiceConfig {
            arms,
            seed,
            data_dir: data_dir.into(),
            game: GameConfig::default(),
            min_observations: MIN_OBSERVATIONS,
            min_rate_hz: MIN_RATE_HZ,
        }
    }
}

struct Arm {
    name: String,
    treatment: Box<RawValue>,
}

/// Shared service state behind the HTTP handlers.
pub struct Service {
    arms: Vec<Arm>,
    game: GameConfig,
    min_observations: usize,
    min_rate_hz: f64,
    rng: Mutex<ChaCha20Rng>,
    store: Mutex<Store>,
}

/// One accepted upload as a trajectory, for IRL.
#[derive(Debug, Clone)]
pub struct ExportedTrajectory {
    pub session_id: Uuid,
    pub arm: String,
    pub phase: Phase,
    pub trajectory: Trajectory<GameState>,
}

impl Service {
    pub fn new(config: ServiceConfig) -> Result<Self, ServiceError> {
        if config.arms.is_empty() {
            return Err(ServiceError::Config("no arms configured".into()));
        }
        if !config.arms.iter().any(|a| a.name == CONTROL_ARM) {
            return Err(ServiceError::Config(format!("the `{CONTROL_ARM}` arm is required")));
        }
        config.game.validate().map_err(|e| ServiceError::Config(e.to_string()))?;
        let space = enumerate_feature_space();
        let mut arms: Vec<Arm> = Vec::with_capacity(config.arms.len());
        for spec in &config.arms {
            if arms.iter().any(|a| a.name == spec.name) {
                return Err(ServiceError::Config(format!("duplicate arm `{}`", spec.name)));
            }
            spec.treatment.check(&space)?;
            let treatment = RawValue::from_string(spec.treatment.to_json()?)?;
            arms.push(Arm { name: spec.name.clone(), treatment });
        }
        Ok(Service {
            arms,
            game: config.game,
            min_observations: config.min_observations,
            min_rate_hz: config.min_rate_hz,
            rng: Mutex::new(ChaCha20Rng::seed_from_u64(config.seed)),
            store: Mutex::new(Store::open(config.data_dir)?),
        })
    }

    pub fn arm_names(&self) -> Vec<&str> {
        self.arms.iter().map(|a| a.name.as_str()).collect()
    }

    /// Next arm index from the seeded assignment stream.
    pub fn assign(&self) -> usize {
        self.rng.lock().expect("assignment lock").gen_range(0..self.arms.len())
    }

    fn session_config(&self, metadata: &ClientMetadata) -> GameConfig {
        let mut config = self.game.clone();
        if let (Some(w), Some(h)) = (metadata.screen_width, metadata.screen_height) {
            let sized = GameConfig { width: w, height: h, ..config.clone() };
            if sized.validate().is_ok() {
                config = sized;
            }
        }
        config
    }

    /// Creates a session and returns the JSON reply body.
    pub fn create_session(&self, metadata: ClientMetadata) -> Result<(Uuid, String), ServiceError> {
        let arm = &self.arms[self.assign()];
        let session_id = Uuid::new_v4();
        let config = self.session_config(&metadata);
        let now = Utc::now();
        let body = serde_json::to_string(&model::SessionResponse {
            session_id,
            arm: &arm.name,
            config: &config,
            treatment: &arm.treatment,
        })?;
        let record = SessionRecord { session_id, arm: arm.name.clone(), created: now.to_rfc3339(), metadata, config };
        self.store.lock().expect("store lock").append(Record::Session(record), now)?;
        Ok((session_id, body))
    }

    /// Validates an upload and, if it passes, stores it with the replayed
    /// touch count.
    pub fn ingest(&self, upload: TrajectoryUpload) -> Result<IngestOutcome, ServiceError> {
        let reject = |reason: RejectReason, detail: String| Ok(IngestOutcome::Rejected { reason, detail });
        let mut store = self.store.lock().expect("store lock");
        let Some(session) = store.session(&upload.session_id) else {
            return reject(RejectReason::UnknownSession, format!("no session {}", upload.session_id));
        };
        let arm = session.arm.clone();
        if store.has_phase(&upload.session_id, upload.phase) {
            return reject(RejectReason::AlreadyRecorded, format!("{} already recorded", upload.phase));
        }
        let n = upload.observations.len();
        if n < self.min_observations {
            return reject(
                RejectReason::MinObservations,
                format!("{n} observations, at least {} required", self.min_observations),
            );
        }
        let times: Vec<f64> = upload.observations.iter().map(|o| o.t_ms).collect();
        if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
            return reject(RejectReason::Malformed, "timestamps must be finite and increasing".into());
        }
        let rate = (n - 1) as f64 * 1000.0 / (times[n - 1] - times[0]);
        if rate < self.min_rate_hz {
            return reject(RejectReason::MinRate, format!("{rate:.2} Hz, at least {} Hz required", self.min_rate_hz));
        }
        let mut states = Vec::with_capacity(n);
        for (i, o) in upload.observations.iter().enumerate() {
            match decode_state(&o.state) {
                Ok(s) => states.push(s),
                Err(e) => return reject(RejectReason::Malformed, format!("observation {i}: {e}")),
            }
        }
        let server_touches = replay_touches(&states).iter().sum();
        let now = Utc::now();
        let record = TrajectoryRecord {
            session_id: upload.session_id,
            arm,
            phase: upload.phase,
            received: now.to_rfc3339(),
            client_touches: upload.client_touches,
            server_touches,
            observations: upload.observations,
        };
        store.append(Record::Trajectory(record), now)?;
        Ok(IngestOutcome::Accepted { server_touches, client_touches: upload.client_touches })
    }

    pub fn summary(&self) -> Summary {
        let store = self.store.lock().expect("store lock");
        let arms =
            self.arms
                .iter()
                .map(|arm| {
                    let sessions = store.sessions().filter(|s| s.arm == arm.name).count();
                    let mut touches: Vec<f64> = store
                        .trajectories()
                        .iter()
                        .filter(|t| t.arm == arm.name)
                        .map(|t| f64::from(t.server_touches))
                        .collect();
                    touches.sort_by(f64::total_cmp);
                    let n = touches.len();
                    let mean = (n > 0).then(|| touches.iter().sum::<f64>() / n as f64);
                    let median = (n > 0).then(|| {
                        if n % 2 == 1 {
                            touches[n / 2]
                        } else {
                            (touches[n / 2 - 1] + touches[n / 2]) / 2.0
                        }
                    });
                    ArmSummary { arm: arm.name.clone(), sessions, n, mean_touches: mean, median_touches: median }
                })
                .collect();
        Summary { arms }
    }

    /// Accepted uploads as trajectories. Actions are not observed; each is
    /// the grid action nearest to the velocity the cursor reached next.
    pub fn export(&self, arm: Option<&str>) -> Result<Vec<ExportedTrajectory>, ServiceError> {
        let store = self.store.lock().expect("store lock");
        let mut out = Vec::new();
        for t in store.trajectories().iter().filter(|t| arm.map_or(true, |a| t.arm == a)) {
            let states = t
                .observations
                .iter()
                .map(|o| decode_state(&o.state))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| ServiceError::Store(e.to_string()))?;
            let config = store.session(&t.session_id).map_or(&self.game, |s| &s.config);
            let steps = states
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let next = states.get(i + 1).unwrap_or(s);
                    (s.clone(), config.nearest_action(next.vx, next.vy))
                })
                .collect();
            out.push(ExportedTrajectory {
                session_id: t.session_id,
                arm: t.arm.clone(),
                phase: t.phase,
                trajectory: Trajectory::new(steps, 1.0 / config.tick_rate_hz, 0, Source::Human),
            });
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn service(arms: Vec<ArmSpec>, seed: u64) -> (tempfile::TempDir, Result<Service, ServiceError>) {
        let dir = tempfile::tempdir().unwrap();
        let s = Service::new(ServiceConfig::new(arms, seed, dir.path()));
        (dir, s)
    }

    fn treatment_arm(name: &str, space: &FeatureSpace) -> ArmSpec {
        let no_touch = space.index_of(&kpirl_core::game::NO_TOUCH).unwrap();
        let raw: Vec<f64> = (0..space.len()).map(|i| (i % 17) as f64).collect();
        let table = RewardTable::from_raw(raw, no_touch, "gaussian:0.6").unwrap();
        ArmSpec { name: name.into(), treatment: TreatmentFile::new(&table, space).unwrap() }
    }

    #[test]
    fn arm_configuration_errors() {
        let space = enumerate_feature_space();
        assert!(matches!(service(vec![], 0).1, Err(ServiceError::Config(_))));
        assert!(matches!(service(vec![treatment_arm("hh", &space)], 0).1, Err(ServiceError::Config(_))));
        let control = ArmSpec::control(&space).unwrap();
        assert!(matches!(service(vec![control.clone(), control], 0).1, Err(ServiceError::Config(_))));
    }

    #[test]
    fn control_only_always_assigns_control() {
        let space = enumerate_feature_space();
        let (_d, s) = service(vec![ArmSpec::control(&space).unwrap()], 3);
        let s = s.unwrap();
        assert!((0..100).all(|_| s.assign() == 0));
    }

    #[test]
    fn two_arms_split_evenly() {
        let space = enumerate_feature_space();
        let (_d, s) = service(vec![ArmSpec::control(&space).unwrap(), treatment_arm("hh", &space)], 17);
        let s = s.unwrap();
        let hh = (0..10_000).filter(|_| s.assign() == 1).count();
        assert!((hh as f64 / 10_000.0 - 0.5).abs() <= 0.02, "{hh}");
    }

    #[test]
    fn assignment_stream_is_seeded() {
        let space = enumerate_feature_space();
        let arms = || vec![ArmSpec::control(&space).unwrap(), treatment_arm("hh", &space), treatment_arm("ll", &space)];
        let (_a, a) = service(arms(), 5);
        let (_b, b) = service(arms(), 5);
        let (a, b) = (a.unwrap(), b.unwrap());
        let sa: Vec<usize> = (0..50).map(|_| a.assign()).collect();
        let sb: Vec<usize> = (0..50).map(|_| b.assign()).collect();
        assert_eq!(sa, sb);
    }

    #[test]
    fn foreign_treatment_is_rejected() {
        let space = enumerate_feature_space();
        let mut arm = treatment_arm("hh", &space);
        arm.treatment.space_hash = "ab".repeat(32);
        let (_d, s) = service(vec![ArmSpec::control(&space).unwrap(), arm], 0);
        assert!(matches!(s, Err(ServiceError::Treatment(TreatmentError::IncompatibleSpace { .. }))));
    }
}
