use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use maupertuis::{Aabb, MetricConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// Configuration for `solve`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub spec: u32,
    pub metric: MetricConfig,
    pub q_a: Vec<f64>,
    pub q_b: Vec<f64>,
    pub schedule: ScheduleConfig,
    /// Region `P` for the admissibility check; defaults to a box around the chord.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<Aabb>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub force: bool,
}

/// Integers are read signed so that a negative value is reported against
/// its field instead of as a type error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    #[serde(rename = "M0", default, skip_serializing_if = "Option::is_none")]
    pub m0: Option<i64>,
    pub k_max: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_test: Option<i64>,
}

/// Configuration for `bench`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub spec: u32,
    pub alphas: Vec<f64>,
    #[serde(default = "default_ell_total")]
    pub ell_total: f64,
    pub k_min: i64,
    pub k_max: i64,
    #[serde(rename = "M0", default = "one")]
    pub m0: i64,
    /// Unit normal direction of the exponent gradient, `n − 1` entries.
    #[serde(default = "default_direction")]
    pub direction: Vec<f64>,
    #[serde(default = "default_flat_tolerance")]
    pub flat_tolerance: f64,
    #[serde(default = "default_bench_steps")]
    pub max_steps: i64,
    #[serde(default)]
    pub windows: Windows,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

/// Acceptance windows for the fitted exponents; absent windows are not gated.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Windows {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effort: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_r_squared: Option<f64>,
}

fn default_ell_total() -> f64 {
    2.0
}

fn one() -> i64 {
    1
}

fn default_direction() -> Vec<f64> {
    vec![1.0]
}

fn default_flat_tolerance() -> f64 {
    1e-9
}

fn default_bench_steps() -> i64 {
    100_000_000
}

/// Marks failures of configuration parsing or validation (exit code 1).
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn invalid(field: &str, reason: impl std::fmt::Display) -> anyhow::Error {
    ConfigError(format!("invalid `{field}`: {reason}")).into()
}

fn load<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))
        .map_err(|e| ConfigError(format!("{e:#}")))?;
    toml::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())).into())
}

fn check_spec(spec: u32) -> Result<()> {
    if spec != SCHEMA_VERSION {
        return Err(invalid(
            "spec",
            format!("unsupported schema version {spec}, expected {SCHEMA_VERSION}"),
        ));
    }
    Ok(())
}

fn positive_int(field: &str, v: i64) -> Result<()> {
    if v <= 0 {
        return Err(invalid(
            field,
            format!("must be a positive integer, got {v}"),
        ));
    }
    Ok(())
}

fn nonnegative_int(field: &str, v: i64) -> Result<()> {
    if v < 0 {
        return Err(invalid(field, format!("must be nonnegative, got {v}")));
    }
    Ok(())
}

fn check_points(field: &str, v: &[f64], dim: usize) -> Result<()> {
    if v.len() != dim {
        return Err(invalid(
            field,
            format!("needs {dim} coordinates, got {}", v.len()),
        ));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(invalid(field, "coordinates must be finite"));
    }
    Ok(())
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let cfg: RunConfig = load(path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        check_spec(self.spec)?;
        let dim = self.metric.dim;
        check_points("q_a", &self.q_a, dim)?;
        check_points("q_b", &self.q_b, dim)?;
        if let Some(r) = &self.region {
            check_points("region.lo", &r.lo, dim)?;
            check_points("region.hi", &r.hi, dim)?;
        }
        let s = &self.schedule;
        if let Some(m0) = s.m0 {
            positive_int("schedule.M0", m0)?;
        }
        nonnegative_int("schedule.k_max", s.k_max)?;
        if s.k_max > 30 {
            return Err(invalid("schedule.k_max", "at most 30 levels are supported"));
        }
        if let Some(m) = s.max_steps {
            positive_int("schedule.max_steps", m)?;
        }
        if let Some(n) = s.n_test {
            positive_int("schedule.n_test", n)?;
        }
        if let Some(t) = s.stop_tol {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(invalid("schedule.stop_tol", "must be a nonnegative number"));
            }
        }
        if let Some(e) = s.eps_max {
            if !(e > 0.0 && e.is_finite()) {
                return Err(invalid("schedule.eps_max", "must be positive"));
            }
        }
        if let Some(z) = s.zeta0 {
            if !(z > 0.0 && z.is_finite()) {
                return Err(invalid("schedule.zeta0", "must be positive"));
            }
        }
        Ok(())
    }
}

impl BenchConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let cfg: BenchConfig = load(path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        check_spec(self.spec)?;
        if self.alphas.is_empty() {
            return Err(invalid("alphas", "at least one value is required"));
        }
        positive_int("M0", self.m0)?;
        positive_int("max_steps", self.max_steps)?;
        nonnegative_int("k_min", self.k_min)?;
        nonnegative_int("k_max", self.k_max)?;
        if self.k_max > 30 {
            return Err(invalid("k_max", "at most 30 levels are supported"));
        }
        if self.k_max <= self.k_min {
            return Err(invalid(
                "k_max",
                format!("the range k_min..=k_max = {}..={} has fewer than two levels, so no rate can be fitted", self.k_min, self.k_max),
            ));
        }
        for (name, w) in [
            ("windows.error", self.windows.error),
            ("windows.effort", self.windows.effort),
        ] {
            if let Some([lo, hi]) = w {
                if !(lo <= hi) {
                    return Err(invalid(name, "lower bound exceeds upper bound"));
                }
            }
        }
        Ok(())
    }
}
