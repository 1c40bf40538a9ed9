//! Run manifest: written when a run starts, finalized (and made read-only)
//! when it ends.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use filmheat::integrate::SolverSettings;
use filmheat::params::ScalingReport;
use filmheat::DimensionlessGroups;
use serde::{Deserialize, Serialize};

use crate::config::Config;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Running,
    Completed,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub kind: String,
    pub nx: usize,
    pub dx: f64,
    pub useful_points: usize,
    pub n_cheb: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub arguments: Vec<String>,
    pub version: String,
    pub config: Config,
    pub groups: DimensionlessGroups,
    pub scaling: ScalingReport,
    pub grid: GridInfo,
    pub solver: SolverSettings,
    pub seed: Option<u64>,
    pub started: String,
    pub finished: Option<String>,
    pub status: RunStatus,
    pub message: Option<String>,
    /// Command-specific summary (solver statistics, sample counts).
    pub summary: serde_json::Value,
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

impl RunManifest {
    pub fn start(
        command: &str,
        config: &Config,
        groups: DimensionlessGroups,
        scaling: ScalingReport,
        grid: GridInfo,
        seed: Option<u64>,
    ) -> Self {
        RunManifest {
            command: command.into(),
            arguments: std::env::args().skip(1).collect(),
            version: env!("CARGO_PKG_VERSION").into(),
            config: config.clone(),
            groups,
            scaling,
            grid,
            solver: config.solver,
            seed,
            started: now(),
            finished: None,
            status: RunStatus::Running,
            message: None,
            summary: serde_json::Value::Null,
        }
    }

    pub fn path(dir: &Path) -> PathBuf {
        dir.join("manifest.json")
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = Self::path(dir);
        let text = serde_json::to_string_pretty(self)?;
        fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }

    /// Records the outcome and write-protects the file.
    pub fn finalize(
        mut self,
        dir: &Path,
        status: RunStatus,
        message: Option<String>,
        summary: serde_json::Value,
    ) -> Result<()> {
        self.status = status;
        self.message = message;
        self.summary = summary;
        self.finished = Some(now());
        self.write(dir)?;
        let path = Self::path(dir);
        let mut perms = fs::metadata(&path)?.permissions();
        perms.set_readonly(true);
        fs::set_permissions(&path, perms)?;
        Ok(())
    }
}

/// Moves a finalized manifest aside so a resumed run can start a new one.
pub fn archive_previous(dir: &Path) -> Result<()> {
    let path = RunManifest::path(dir);
    if !path.exists() {
        return Ok(());
    }
    let mut k = 1;
    while dir.join(format!("manifest.previous.{k}.json")).exists() {
        k += 1;
    }
    fs::rename(&path, dir.join(format!("manifest.previous.{k}.json")))?;
    Ok(())
}
