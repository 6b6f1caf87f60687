//! On-disk layout of run and benchmark directories.

use std::path::{Path, PathBuf};

use anyhow::Result;
use maupertuis::bench::RateFit;
use maupertuis::{AdmissibilityCertificate, DynamicsDiagnostics, LevelStats};
use serde::{Deserialize, Serialize};

use crate::config::{BenchConfig, RunConfig};

pub const RUN_FILE: &str = "run.json";
pub const TIMING_FILE: &str = "timing.json";
pub const RESIDUALS_FILE: &str = "residuals.csv";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const BENCH_FILE: &str = "bench.csv";
pub const RATES_FILE: &str = "rates.json";

pub fn level_stem(k: u32) -> String {
    format!("level_{k}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EffectiveSchedule {
    #[serde(rename = "M0")]
    pub m0: usize,
    pub k_max: u32,
    pub eps0: f64,
    pub zeta0: f64,
    pub stop_tol: f64,
    pub eps_max: f64,
    pub max_steps: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_test: Option<usize>,
}

/// Time recovery on one level's polygon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelDynamics {
    pub k: u32,
    #[serde(rename = "T0")]
    pub t0: f64,
    pub diagnostics: DynamicsDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySummary {
    #[serde(rename = "T0")]
    pub t0: f64,
    pub energy: f64,
    pub samples: usize,
    pub diagnostics: DynamicsDiagnostics,
}

/// Contents of `run.json`. Holds nothing that varies between identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunRecord {
    pub spec: u32,
    pub config: RunConfig,
    pub certificate: AdmissibilityCertificate,
    pub forced: bool,
    pub schedule: EffectiveSchedule,
    pub levels: Vec<LevelStats>,
    pub dynamics: Vec<LevelDynamics>,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub self_convergence: Option<RateFit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<TrajectorySummary>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub total_seconds: f64,
    pub levels: Vec<LevelTiming>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelTiming {
    pub k: u32,
    pub birkhoff_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseRates {
    pub alpha: f64,
    pub flat: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_fit: Option<RateFit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effort_fit: Option<RateFit>,
    /// Fit of the cumulative largest single-vertex travel, in grid units.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub travel_fit: Option<RateFit>,
    pub within_windows: bool,
    pub violations: Vec<String>,
}

/// Contents of `rates.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RatesRecord {
    pub spec: u32,
    pub config: BenchConfig,
    pub cases: Vec<CaseRates>,
    pub all_within_windows: bool,
}

/// A required artifact is absent or unreadable (exit code 4).
#[derive(Debug)]
pub struct MissingArtifacts(pub String);

impl std::fmt::Display for MissingArtifacts {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "missing or corrupted artifacts: {}", self.0)
    }
}

impl std::error::Error for MissingArtifacts {}

pub fn read_json<T: serde::de::DeserializeOwned>(dir: &Path, name: &str) -> Result<T> {
    let path: PathBuf = dir.join(name);
    let text = std::fs::read_to_string(&path)
        .map_err(|e| MissingArtifacts(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| MissingArtifacts(format!("{}: {e}", path.display())).into())
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(dir.join(name), text)?;
    Ok(())
}
