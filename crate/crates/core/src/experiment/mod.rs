//! Batch workflows behind the `qbandit` command line.
//!
//! Every command writes into one output directory: CSV tables, JSON results,
//! SVG plots drawn from the same numbers, and a `manifest.json` written last.
//! The manifest records the effective parameters, their SHA-256, the seed and
//! a hash of every file, so rerunning with its parameters reproduces the CSVs
//! byte for byte on the ideal backend. Nothing time- or host-dependent is
//! written.

mod commands;
mod config;
pub mod plot;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::backend::BackendKind;
use crate::error::{Error, Result};

pub use commands::{
    cmd_baseline, cmd_qpe, cmd_reproduce, cmd_train, policy_label, BaselineRequest, Figure, QpePlan, QpeRun,
};
pub use config::{EnvSource, ExperimentConfig, TrainSummary};

pub const MANIFEST: &str = "manifest.json";
pub const TRAIN_RESULT: &str = "train_result.json";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
}

/// One independent simulation inside a command.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunRecord {
    pub id: String,
    pub backend: BackendKind,
    pub seed: u64,
    pub shots: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    /// SHA-256 of the compact JSON encoding of `parameters`.
    pub config_hash: String,
    pub parameters: serde_json::Value,
    pub runs: Vec<RunRecord>,
    pub files: Vec<FileRecord>,
}

/// What a command produced.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportBundle {
    pub dir: PathBuf,
    pub manifest: Manifest,
}

impl ReportBundle {
    pub fn files(&self) -> impl Iterator<Item = PathBuf> + '_ {
        self.manifest.files.iter().map(|f| self.dir.join(&f.path))
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Writes files under one root and remembers their hashes. Safe to share
/// between parallel sub-runs.
pub(crate) struct Artifacts {
    root: PathBuf,
    files: Mutex<BTreeMap<String, String>>,
}

impl Artifacts {
    pub(crate) fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Mutex::new(BTreeMap::new()),
        })
    }

    pub(crate) fn write(&self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.files
            .lock()
            .expect("artifact lock poisoned")
            .insert(rel.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub(crate) fn write_csv<S: AsRef<str>>(&self, rel: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<S>>) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for row in rows {
            w.write_record(row.iter().map(|c| c.as_ref()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::io(self.root.join(rel), e.into_error()))?;
        self.write(rel, &bytes)
    }

    pub(crate) fn write_json<S: Serialize>(&self, rel: &str, value: &S) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(rel, &bytes)
    }

    /// Write the manifest; must be the last write of a command.
    pub(crate) fn finish(
        self,
        command: &str,
        seed: u64,
        parameters: serde_json::Value,
        runs: Vec<RunRecord>,
    ) -> Result<ReportBundle> {
        let files = self
            .files
            .into_inner()
            .expect("artifact lock poisoned")
            .into_iter()
            .map(|(path, sha256)| FileRecord { path, sha256 })
            .collect();
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed,
            config_hash: sha256_hex(&serde_json::to_vec(&parameters)?),
            parameters,
            runs,
            files,
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        let path = self.root.join(MANIFEST);
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        Ok(ReportBundle {
            dir: self.root,
            manifest,
        })
    }
}

/// Shortest round-trip decimal form, as written to every CSV.
pub(crate) fn num(x: f64) -> String {
    x.to_string()
}
