//! Output directory with a manifest of everything written.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;
use crate::GlobalArgs;

#[derive(Debug, Clone, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    seed: Option<u64>,
    jobs: Option<usize>,
    arguments: serde_json::Value,
    inputs: &'a [FileDigest],
    outputs: &'a [FileDigest],
}

pub const MANIFEST: &str = "manifest.json";

pub struct Output {
    dir: PathBuf,
    command: &'static str,
    seed: Option<u64>,
    jobs: Option<usize>,
    arguments: serde_json::Value,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
}

fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Output {
    pub fn create(global: &GlobalArgs, command: &'static str, arguments: &impl Serialize) -> Result<Self, CliError> {
        fs::create_dir_all(&global.out).map_err(|e| CliError::io(&global.out, e))?;
        Ok(Output {
            dir: global.out.clone(),
            command,
            seed: global.seed,
            jobs: global.jobs,
            arguments: serde_json::to_value(arguments).map_err(CliError::run)?,
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Reads an input file and records its digest.
    pub fn read_input(&mut self, path: &Path) -> Result<String, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        self.inputs.push(FileDigest { path: path.display().to_string(), sha256: digest(text.as_bytes()) });
        Ok(text)
    }

    /// Writes `name` (relative to the output directory).
    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        let bytes = contents.as_ref();
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        self.outputs.push(FileDigest { path: name.to_string(), sha256: digest(bytes) });
        Ok(path)
    }

    pub fn finish(self) -> Result<(), CliError> {
        let manifest = Manifest {
            tool: "kpirl",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            seed: self.seed,
            jobs: self.jobs,
            arguments: self.arguments,
            inputs: &self.inputs,
            outputs: &self.outputs,
        };
        let path = self.dir.join(MANIFEST);
        let text = serde_json::to_string_pretty(&manifest).map_err(CliError::run)?;
        fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))
    }
}
