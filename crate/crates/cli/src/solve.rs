use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use maupertuis::bench::fit_rate;
use maupertuis::io::{trajectory_csv, write_polygon};
use maupertuis::{
    check_admissible, default_region, recover_time, run_refinement_observed, LocalFrame,
    RefineOptions, RefinementSchedule,
};

use crate::config::{ConfigError, RunConfig};
use crate::record::*;

pub fn solve(cfg: &RunConfig, out: &Path, force_flag: bool) -> Result<RunRecord> {
    let metric = cfg
        .metric
        .build()
        .map_err(|e| ConfigError(format!("metric: {e}")))?;
    let frame = LocalFrame::new(&cfg.q_a, &cfg.q_b)?;
    let region = match &cfg.region {
        Some(r) => r.clone(),
        None => default_region(&metric, &cfg.q_a, &cfg.q_b)?,
    };
    let certificate = check_admissible(&metric, &cfg.q_a, &cfg.q_b, &region)?;
    let eps_max = cfg.schedule.eps_max.unwrap_or(certificate.eps_max);
    let m0 = match cfg.schedule.m0 {
        Some(m) => m as usize,
        None => RefinementSchedule::auto_m0(frame.ell(), eps_max),
    };
    let schedule = RefinementSchedule {
        m0,
        k_max: cfg.schedule.k_max as u32,
        stop_tol: cfg.schedule.stop_tol,
        zeta0: cfg.schedule.zeta0,
    };
    let options = RefineOptions {
        max_steps: cfg
            .schedule
            .max_steps
            .map_or(RefineOptions::default().max_steps, |m| m as u64),
        eps_max: Some(eps_max),
        region: Some(region),
        force: cfg.force || force_flag,
        record_history: false,
        n_test: cfg.schedule.n_test.map(|n| n as usize),
    };
    let ell = frame.ell();
    let effective = EffectiveSchedule {
        m0,
        k_max: schedule.k_max,
        eps0: schedule.eps0(ell),
        zeta0: schedule.zeta0(ell),
        stop_tol: schedule.stop_tol(ell),
        eps_max,
        max_steps: options.max_steps,
        n_test: options.n_test,
    };

    std::fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    let started = Instant::now();
    let mut timing = Timing::default();
    let mut dynamics = Vec::new();
    let mut residuals = String::from("k,M,eps,weak_residual,sup_first,sup_second,l2_delta\n");
    let mut failure = None;
    let timed = metric.potential().is_some();
    let run = run_refinement_observed(
        &metric,
        &cfg.q_a,
        &cfg.q_b,
        &schedule,
        &options,
        &mut |stats, polygon| {
            if failure.is_some() {
                return;
            }
            let step = (|| -> Result<()> {
                write_polygon(out, &level_stem(stats.k), polygon)?;
                if timed {
                    let traj = recover_time(&metric, polygon)?;
                    dynamics.push(LevelDynamics {
                        k: stats.k,
                        t0: traj.t0,
                        diagnostics: traj.diagnostics,
                    });
                }
                Ok(())
            })();
            if let Err(e) = step {
                failure = Some(e);
                return;
            }
            let delta = stats
                .l2_delta_to_previous
                .map_or(String::new(), |d| d.to_string());
            let _ = writeln!(
                residuals,
                "{},{},{},{},{},{},{}",
                stats.k,
                stats.m,
                stats.eps,
                stats.weak_residual,
                stats.sup_first,
                stats.sup_second,
                delta
            );
            timing.levels.push(LevelTiming {
                k: stats.k,
                birkhoff_seconds: stats.birkhoff.wall_time.as_secs_f64(),
            });
        },
    );
    std::fs::write(out.join(RESIDUALS_FILE), &residuals)?;
    timing.total_seconds = started.elapsed().as_secs_f64();
    write_json(out, TIMING_FILE, &timing)?;
    if let Some(e) = failure {
        return Err(e);
    }
    let run = run?;

    let trajectory = if timed {
        let traj = recover_time(&metric, &run.final_polygon)?;
        std::fs::write(out.join(TRAJECTORY_FILE), trajectory_csv(&traj))?;
        Some(TrajectorySummary {
            t0: traj.t0,
            energy: traj.energy,
            samples: traj.samples.len(),
            diagnostics: traj.diagnostics,
        })
    } else {
        None
    };
    let deltas: Vec<(f64, f64)> = run
        .levels
        .iter()
        .filter_map(|l| {
            l.l2_delta_to_previous
                .filter(|&d| d > 0.0)
                .map(|d| (l.eps, d))
        })
        .collect();
    let record = RunRecord {
        spec: crate::config::SCHEMA_VERSION,
        config: cfg.clone(),
        certificate: run.certificate,
        forced: run.forced,
        schedule: effective,
        levels: run.levels,
        dynamics,
        converged: run.converged,
        self_convergence: fit_rate(&deltas).ok(),
        trajectory,
    };
    write_json(out, RUN_FILE, &record)?;
    Ok(record)
}
