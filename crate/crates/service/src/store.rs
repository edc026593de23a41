//! Append-only record store: one JSON record per line in a file per UTC
//! day, plus an index of where every record lives.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use kpirl_core::game::GameConfig;
use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::model::{ClientMetadata, Observation, Phase};
use crate::ServiceError;

pub const INDEX_FILE: &str = "index.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRecord {
    pub session_id: Uuid,
    pub arm: String,
    pub created: String,
    pub metadata: ClientMetadata,
    pub config: GameConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub session_id: Uuid,
    pub arm: String,
    pub phase: Phase,
    pub received: String,
    pub client_touches: u32,
    pub server_touches: u32,
    pub observations: Vec<Observation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Record {
    Session(SessionRecord),
    Trajectory(TrajectoryRecord),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub session_id: Uuid,
    pub kind: String,
    pub phase: Option<Phase>,
    pub file: String,
    /// 1-based line within `file`.
    pub line: usize,
}

/// In-memory view of everything on disk.
#[derive(Debug)]
pub struct Store {
    dir: PathBuf,
    sessions: HashMap<Uuid, SessionRecord>,
    trajectories: Vec<TrajectoryRecord>,
    line_counts: HashMap<String, usize>,
}

fn day_file(at: &DateTime<Utc>) -> String {
    format!("records-{}.jsonl", at.format("%Y-%m-%d"))
}

fn corrupt(path: &Path, line: usize, e: impl std::fmt::Display) -> ServiceError {
    ServiceError::Store(format!("{}:{line}: {e}", path.display()))
}

impl Store {
    /// Opens `dir`, creating it if needed, and loads every indexed record.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, ServiceError> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        let mut store = Store { dir, sessions: HashMap::new(), trajectories: Vec::new(), line_counts: HashMap::new() };
        let index_path = store.dir.join(INDEX_FILE);
        if !index_path.exists() {
            return Ok(store);
        }
        let mut files: HashMap<String, Vec<String>> = HashMap::new();
        for (i, line) in BufReader::new(File::open(&index_path)?).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: IndexEntry = serde_json::from_str(&line).map_err(|e| corrupt(&index_path, i + 1, e))?;
            if !files.contains_key(&entry.file) {
                let path = store.dir.join(&entry.file);
                let lines = BufReader::new(File::open(&path)?).lines().collect::<Result<Vec<_>, _>>()?;
                store.line_counts.insert(entry.file.clone(), lines.len());
                files.insert(entry.file.clone(), lines);
            }
            let path = store.dir.join(&entry.file);
            let text = files[&entry.file]
                .get(entry.line.wrapping_sub(1))
                .ok_or_else(|| corrupt(&path, entry.line, "indexed line is missing"))?;
            let record: Record = serde_json::from_str(text).map_err(|e| corrupt(&path, entry.line, e))?;
            store.absorb(record);
        }
        Ok(store)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn absorb(&mut self, record: Record) {
        match record {
            Record::Session(s) => {
                self.sessions.insert(s.session_id, s);
            }
            Record::Trajectory(t) => self.trajectories.push(t),
        }
    }

    /// Appends the record to today's file, then indexes it.
    pub fn append(&mut self, record: Record, at: DateTime<Utc>) -> Result<(), ServiceError> {
        let file = day_file(&at);
        let path = self.dir.join(&file);
        let count = match self.line_counts.get(&file) {
            Some(&n) => n,
            None if path.exists() => BufReader::new(File::open(&path)?).lines().count(),
            None => 0,
        };
        let mut line = serde_json::to_string(&record)?;
        line.push('\n');
        let mut out = OpenOptions::new().create(true).append(true).open(&path)?;
        out.write_all(line.as_bytes())?;
        out.sync_data()?;
        self.line_counts.insert(file.clone(), count + 1);
        let (session_id, kind, phase) = match &record {
            Record::Session(s) => (s.session_id, "session", None),
            Record::Trajectory(t) => (t.session_id, "trajectory", Some(t.phase)),
        };
        let entry = IndexEntry { session_id, kind: kind.into(), phase, file, line: count + 1 };
        let mut index_line = serde_json::to_string(&entry)?;
        index_line.push('\n');
        let mut index = OpenOptions::new().create(true).append(true).open(self.dir.join(INDEX_FILE))?;
        index.write_all(index_line.as_bytes())?;
        index.sync_data()?;
        self.absorb(record);
        Ok(())
    }

    pub fn session(&self, id: &Uuid) -> Option<&SessionRecord> {
        self.sessions.get(id)
    }

    pub fn sessions(&self) -> impl Iterator<Item = &SessionRecord> {
        self.sessions.values()
    }

    pub fn trajectories(&self) -> &[TrajectoryRecord] {
        &self.trajectories
    }

    pub fn has_phase(&self, id: &Uuid, phase: Phase) -> bool {
        self.trajectories.iter().any(|t| t.session_id == *id && t.phase == phase)
    }
}
