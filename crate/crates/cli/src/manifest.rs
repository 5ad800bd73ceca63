//! Output directory bookkeeping: atomic writes and `manifest.json`.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Serialize)]
pub struct InputHash {
    /// File path, or `builtin:<name>` / `fixture:<name>` for bundled inputs.
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    /// The parsed command-line arguments; enough to rerun the command.
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub inputs: Vec<InputHash>,
    /// Every file written, relative to the output directory.
    pub outputs: Vec<String>,
    pub started_unix: f64,
    pub finished_unix: f64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

fn write_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::internal(format!("cannot write {}: {e}", path.display()))
}

/// Writes through a sibling temporary file and a rename, so readers never
/// see a half-written artifact.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| write_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| write_err(path, e))
}

/// One command invocation writing into one directory.
pub struct Run {
    dir: PathBuf,
    started: f64,
    seeds: Vec<u64>,
    inputs: Vec<InputHash>,
    outputs: Vec<String>,
}

impl Run {
    pub fn create(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| write_err(dir, e))?;
        Ok(Run { dir: dir.to_path_buf(), started: now(), seeds: Vec::new(), inputs: Vec::new(), outputs: Vec::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn add_seed(&mut self, seed: u64) {
        if !self.seeds.contains(&seed) {
            self.seeds.push(seed);
        }
    }

    pub fn add_input(&mut self, name: impl Into<String>, content: &[u8]) {
        let name = name.into();
        if !self.inputs.iter().any(|i| i.name == name) {
            self.inputs.push(InputHash { name, sha256: sha256_hex(content) });
        }
    }

    pub fn add_input_file(&mut self, path: &Path) -> CliResult<()> {
        let bytes = fs::read(path).map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
        self.add_input(path.display().to_string(), &bytes);
        Ok(())
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> CliResult<PathBuf> {
        let path = self.path(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| write_err(parent, e))?;
        }
        write_atomic(&path, bytes)?;
        if !self.outputs.iter().any(|o| o == name) {
            self.outputs.push(name.to_string());
        }
        Ok(path)
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> CliResult<PathBuf> {
        let text = serde_json::to_string_pretty(value).map_err(|e| CliError::internal(e.to_string()))?;
        self.write_bytes(name, (text + "\n").as_bytes())
    }

    /// Writes `manifest.json` and returns it.
    pub fn finish(self, command: &str, config: &impl Serialize) -> CliResult<RunManifest> {
        let manifest = RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: serde_json::to_value(config).map_err(|e| CliError::internal(e.to_string()))?,
            seeds: self.seeds,
            inputs: self.inputs,
            outputs: self.outputs,
            started_unix: self.started,
            finished_unix: now(),
        };
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::internal(e.to_string()))?;
        write_atomic(&self.dir.join("manifest.json"), (text + "\n").as_bytes())?;
        Ok(manifest)
    }
}
