use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use maupertuis::bench::{run_benchmark, BenchOptions, CaseResult, ExponentialCase, RateFit};

use crate::config::{BenchConfig, ConfigError, Windows};
use crate::record::*;

pub fn cases(cfg: &BenchConfig) -> Result<Vec<ExponentialCase>> {
    let norm = cfg.direction.iter().map(|d| d * d).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err(ConfigError("invalid `direction`: must be nonzero".into()).into());
    }
    let direction: Vec<f64> = cfg.direction.iter().map(|d| d / norm).collect();
    let cases: Vec<ExponentialCase> = cfg
        .alphas
        .iter()
        .map(|&alpha| ExponentialCase {
            alpha,
            direction: direction.clone(),
            ell_total: cfg.ell_total,
            k_min: cfg.k_min as u32,
            k_max: cfg.k_max as u32,
        })
        .collect();
    for c in &cases {
        c.validate()
            .map_err(|e| ConfigError(format!("case alpha = {}: {e}", c.alpha)))?;
    }
    Ok(cases)
}

fn check_fit(
    name: &str,
    fit: &Option<RateFit>,
    window: Option<[f64; 2]>,
    min_r2: Option<f64>,
    out: &mut Vec<String>,
) {
    let Some(fit) = fit else { return };
    if let Some([lo, hi]) = window {
        if !(fit.exponent >= lo && fit.exponent <= hi) {
            out.push(format!(
                "{name} exponent {:.4} outside [{lo}, {hi}]",
                fit.exponent
            ));
        }
        if let Some(r2) = min_r2 {
            if !(fit.r_squared >= r2) {
                out.push(format!("{name} fit r^2 {:.4} below {r2}", fit.r_squared));
            }
        }
    }
}

pub fn window_violations(
    flat: bool,
    error_fit: &Option<RateFit>,
    effort_fit: &Option<RateFit>,
    windows: &Windows,
) -> Vec<String> {
    let mut violations = Vec::new();
    if !flat {
        check_fit(
            "error",
            error_fit,
            windows.error,
            windows.min_r_squared,
            &mut violations,
        );
        check_fit(
            "effort",
            effort_fit,
            windows.effort,
            windows.min_r_squared,
            &mut violations,
        );
    }
    violations
}

pub fn case_rates(result: &CaseResult, windows: &Windows) -> CaseRates {
    let violations = window_violations(result.flat, &result.error_fit, &result.effort_fit, windows);
    CaseRates {
        alpha: result.case.alpha,
        flat: result.flat,
        error_fit: result.error_fit.clone(),
        effort_fit: result.effort_fit.clone(),
        travel_fit: result.travel_fit.clone(),
        within_windows: violations.is_empty(),
        violations,
    }
}

pub fn bench_csv(results: &[CaseResult]) -> String {
    let mut out = String::from("alpha,k,eps,l2_error,effort_level,effort_cum,travel_cum\n");
    for r in results {
        for row in &r.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                row.alpha,
                row.k,
                row.eps,
                row.l2_error,
                row.effort_level,
                row.effort_cum,
                row.travel_cum
            );
        }
    }
    out
}

pub fn bench(cfg: &BenchConfig, out: &Path) -> Result<RatesRecord> {
    let cases = cases(cfg)?;
    let options = BenchOptions {
        m0: cfg.m0 as usize,
        flat_tolerance: cfg.flat_tolerance,
        max_steps: cfg.max_steps as u64,
    };
    let results = run_benchmark(&cases, &options)?;
    std::fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    std::fs::write(out.join(BENCH_FILE), bench_csv(&results))?;
    let rates: Vec<CaseRates> = results
        .iter()
        .map(|r| case_rates(r, &cfg.windows))
        .collect();
    let record = RatesRecord {
        spec: crate::config::SCHEMA_VERSION,
        config: cfg.clone(),
        all_within_windows: rates.iter().all(|r| r.within_windows),
        cases: rates,
    };
    write_json(out, RATES_FILE, &record)?;
    Ok(record)
}
