//! Run manifests: config digest, seeds and per-stage file digests.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const FORMAT_VERSION: u32 = 1;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_digest(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(format!("reading `{}`", path.display()), e))?;
    Ok(sha256_hex(&bytes))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub config_sha256: String,
    pub seed: u64,
    /// Input label to digest.
    pub inputs: BTreeMap<String, String>,
    /// Output file (relative to the output directory) to digest.
    pub outputs: BTreeMap<String, String>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub core_version: String,
    pub format_version: u32,
    pub config_sha256: String,
    pub seed: u64,
    pub stages: BTreeMap<String, StageRecord>,
}

impl RunManifest {
    pub fn new(config_sha256: String, seed: u64) -> Self {
        Self {
            tool: "cautious".into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            core_version: cautious_core::VERSION.into(),
            format_version: FORMAT_VERSION,
            config_sha256,
            seed,
            stages: BTreeMap::new(),
        }
    }

    /// Loads the manifest in `dir`, or starts a fresh one. Stages recorded
    /// under a different config are kept; each carries its own digest.
    pub fn open(dir: &Path, config_sha256: String, seed: u64) -> CliResult<Self> {
        let path = dir.join(MANIFEST_FILE);
        let mut m = match std::fs::read(&path) {
            Ok(bytes) => serde_json::from_slice::<RunManifest>(&bytes)
                .unwrap_or_else(|_| RunManifest::new(config_sha256.clone(), seed)),
            Err(_) => RunManifest::new(config_sha256.clone(), seed),
        };
        m.config_sha256 = config_sha256;
        m.seed = seed;
        Ok(m)
    }

    pub fn write(&self, dir: &Path) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        let path = dir.join(MANIFEST_FILE);
        std::fs::write(&path, text).map_err(|e| CliError::io(format!("writing `{}`", path.display()), e))
    }
}

/// Collects the files one stage writes, with their digests.
#[derive(Debug)]
pub struct StageWriter {
    dir: PathBuf,
    pub record: StageRecord,
}

impl StageWriter {
    pub fn new(dir: &Path, config_sha256: &str, seed: u64) -> CliResult<Self> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(format!("creating `{}`", dir.display()), e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            record: StageRecord {
                config_sha256: config_sha256.to_string(),
                seed,
                ..StageRecord::default()
            },
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn input(&mut self, label: &str, path: &Path) -> CliResult<()> {
        let digest = file_digest(path)?;
        self.record.inputs.insert(label.to_string(), digest);
        Ok(())
    }

    /// Writes `bytes` to `name` inside the output directory.
    pub fn file(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::io(format!("writing `{}`", path.display()), e))?;
        self.record.outputs.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    /// Records a file written outside the output directory under `label`.
    pub fn external(&mut self, label: &str, path: &Path) -> CliResult<()> {
        let digest = file_digest(path)?;
        self.record.outputs.insert(label.to_string(), digest);
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(value).expect("value serializes");
        text.push('\n');
        self.file(name, text.as_bytes())
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        self.record.warnings.push(message.into());
    }

    pub fn finish(self, manifest: &mut RunManifest, stage: &str) {
        manifest.stages.insert(stage.to_string(), self.record);
    }
}
