//! Run manifest: what was produced, from which configuration, with digests.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
    /// Stage that wrote the file.
    pub stage: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub tool_version: String,
    pub started: String,
    pub finished: Option<String>,
    /// Stages that completed, in execution order.
    pub completed_stages: Vec<String>,
    pub files: Vec<FileEntry>,
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

impl RunManifest {
    pub fn new(config_hash: impl Into<String>) -> Self {
        Self {
            config_hash: config_hash.into(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started: now(),
            finished: None,
            completed_stages: Vec::new(),
            files: Vec::new(),
        }
    }

    /// Records (or re-records) a file written under `root`.
    pub fn record(&mut self, root: &Path, relative: &str, stage: &str) -> Result<()> {
        let full = root.join(relative);
        let bytes = std::fs::read(&full).map_err(|e| Error::io(&full, e))?;
        let entry = FileEntry {
            path: relative.to_string(),
            sha256: sha256_hex(&bytes),
            bytes: bytes.len() as u64,
            stage: stage.to_string(),
        };
        match self.files.iter_mut().find(|f| f.path == relative) {
            Some(f) => *f = entry,
            None => self.files.push(entry),
        }
        Ok(())
    }

    pub fn mark_completed(&mut self, stage: &str) {
        if !self.completed_stages.iter().any(|s| s == stage) {
            self.completed_stages.push(stage.to_string());
        }
    }

    pub fn is_completed(&self, stage: &str) -> bool {
        self.completed_stages.iter().any(|s| s == stage)
    }

    /// Drops a stage and every file it wrote, e.g. before re-running it.
    pub fn forget_stage(&mut self, stage: &str) {
        self.completed_stages.retain(|s| s != stage);
        self.files.retain(|f| f.stage != stage);
    }

    pub fn finish(&mut self) {
        self.finished = Some(now());
    }

    pub fn files_of(&self, stage: &str) -> impl Iterator<Item = &FileEntry> {
        let stage = stage.to_string();
        self.files.iter().filter(move |f| f.stage == stage)
    }

    /// Files whose current digest differs from the recorded one, or that are
    /// missing.
    pub fn verify(&self, root: &Path) -> Vec<PathBuf> {
        self.files
            .iter()
            .filter(|f| file_sha256(&root.join(&f.path)).map_or(true, |d| d != f.sha256))
            .map(|f| PathBuf::from(&f.path))
            .collect()
    }

    pub fn write(&self, root: &Path) -> Result<()> {
        super::write_json(&root.join(MANIFEST_FILE), self)
    }

    pub fn read(root: &Path) -> Result<Self> {
        super::read_json(&root.join(MANIFEST_FILE))
    }
}
