use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::Config;
use crate::error::CliError;

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputFile {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

/// Self-describing record of one run. Keys serialize in declaration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub command: String,
    pub artifact_version: String,
    pub master_seed: u64,
    pub started: String,
    pub finished: String,
    #[serde(rename = "config_snapshot")]
    pub config: Config,
    pub outputs: Vec<OutputFile>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn timestamp(t: chrono::DateTime<chrono::Utc>) -> String {
    t.format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

/// Output directory of a run; files are hashed as they are written.
pub struct RunDir {
    path: PathBuf,
    command: String,
    config: Config,
    started: chrono::DateTime<chrono::Utc>,
    outputs: Vec<OutputFile>,
}

impl RunDir {
    pub fn create(path: &Path, command: &str, config: &Config) -> Result<Self, CliError> {
        std::fs::create_dir_all(path)
            .map_err(|e| CliError::Usage(format!("cannot create output directory {}: {e}", path.display())))?;
        Ok(Self {
            path: path.to_path_buf(),
            command: command.to_string(),
            config: config.clone(),
            started: chrono::Utc::now(),
            outputs: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        std::fs::write(self.path.join(name), bytes)?;
        self.outputs.push(OutputFile {
            file: name.to_string(),
            bytes: bytes.len(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    pub fn finish(self) -> Result<RunManifest, CliError> {
        let config_json = serde_json::to_vec(&self.config).map_err(|e| CliError::Compute(e.to_string()))?;
        let short = &sha256_hex(&config_json)[..8];
        let manifest = RunManifest {
            run_id: format!("{}-{short}", self.started.format("%Y%m%dT%H%M%SZ")),
            command: self.command,
            artifact_version: ARTIFACT_VERSION.to_string(),
            master_seed: self.config.seed,
            started: timestamp(self.started),
            finished: timestamp(chrono::Utc::now()),
            config: self.config,
            outputs: self.outputs,
        };
        let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Compute(e.to_string()))?;
        text.push('\n');
        std::fs::write(self.path.join(MANIFEST_FILE), text)?;
        Ok(manifest)
    }
}
