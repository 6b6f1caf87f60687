//! `verify` and `report`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::Result;
use maupertuis::bench::fit_rate;
use maupertuis::io::read_polygon;
use maupertuis::{
    difference_profile, l2_delta, polygon_length, recover_time, weak_residual, Polygon,
};

use crate::record::*;

/// What kind of directory `dir` is.
pub enum Artifacts {
    Run(RunRecord),
    Bench(RatesRecord),
}

pub fn load(dir: &Path) -> Result<Artifacts> {
    if dir.join(RUN_FILE).exists() {
        Ok(Artifacts::Run(read_json(dir, RUN_FILE)?))
    } else if dir.join(RATES_FILE).exists() {
        Ok(Artifacts::Bench(read_json(dir, RATES_FILE)?))
    } else {
        Err(MissingArtifacts(format!(
            "{} holds neither {RUN_FILE} nor {RATES_FILE}",
            dir.display()
        ))
        .into())
    }
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    a == b || (a - b).abs() <= rel * a.abs().max(b.abs()) + 1e-300
}

/// Recomputes everything `run.json` or `rates.json` claims; returns the
/// list of disagreements.
pub fn verify(dir: &Path) -> Result<Vec<String>> {
    match load(dir)? {
        Artifacts::Run(record) => verify_run(dir, &record),
        Artifacts::Bench(record) => verify_bench(dir, &record),
    }
}

fn require(dir: &Path, name: &str) -> Result<()> {
    if dir.join(name).is_file() {
        Ok(())
    } else {
        Err(MissingArtifacts(format!("{} not found", dir.join(name).display())).into())
    }
}

fn verify_run(dir: &Path, record: &RunRecord) -> Result<Vec<String>> {
    let metric = record.config.metric.build()?;
    let mut issues = Vec::new();
    require(dir, RESIDUALS_FILE)?;
    if record.levels.is_empty() {
        issues.push("no levels recorded".to_string());
    }
    let mut previous: Option<Polygon> = None;
    for stats in &record.levels {
        let k = stats.k;
        let path = dir.join(format!("{}.json", level_stem(k)));
        require(dir, &format!("{}.csv", level_stem(k)))?;
        let polygon = read_polygon(&path)
            .map_err(|e| MissingArtifacts(format!("{}: {e}", path.display())))?;
        let mut check = |what: &str, ok: bool| {
            if !ok {
                issues.push(format!("level {k}: {what}"));
            }
        };
        check("M differs", polygon.m() == stats.m);
        check("eps differs", polygon.eps() == stats.eps);
        check("zeta differs", polygon.zeta() == stats.zeta);
        let length = polygon_length(&metric, &polygon)?;
        check("length differs", close(length, stats.length, 1e-12));
        check(
            "final Birkhoff length differs",
            close(length, stats.birkhoff.final_length, 1e-12),
        );
        let profile = difference_profile(&polygon);
        check(
            "sup_first differs",
            close(profile.sup_first, stats.sup_first, 1e-12),
        );
        check(
            "sup_second differs",
            close(profile.sup_second_inf, stats.sup_second, 1e-12),
        );
        let n_test = record.schedule.n_test.unwrap_or(2 * polygon.m() - 1).max(1);
        let residual = weak_residual(&metric, &polygon, n_test)?;
        check(
            "weak residual differs",
            close(residual, stats.weak_residual, 1e-9)
                || (residual - stats.weak_residual).abs() < 1e-15,
        );
        let delta = match &previous {
            Some(p) => Some(l2_delta(p, &polygon)?),
            None => None,
        };
        check(
            "l2 delta differs",
            match (delta, stats.l2_delta_to_previous) {
                (Some(a), Some(b)) => close(a, b, 1e-12),
                (None, None) => true,
                _ => false,
            },
        );
        if !record.forced {
            check("sup_first exceeds 1", profile.sup_first <= 1.0);
            check(
                "sup_second exceeds N",
                profile.sup_second_inf <= record.certificate.n_bound,
            );
            check(
                "final polygon not in D_N",
                stats.birkhoff.final_in_dn != Some(false),
            );
        }
        if let Some(dynamics) = record.dynamics.iter().find(|d| d.k == k) {
            let traj = recover_time(&metric, &polygon)?;
            check("T0 differs", close(traj.t0, dynamics.t0, 1e-12));
            check(
                "energy drift differs",
                close(
                    traj.diagnostics.max_energy_drift,
                    dynamics.diagnostics.max_energy_drift,
                    1e-9,
                ),
            );
        }
        previous = Some(polygon);
    }
    if let Some(summary) = &record.trajectory {
        require(dir, TRAJECTORY_FILE)?;
        if let Some(last) = &previous {
            let traj = recover_time(&metric, last)?;
            if !close(traj.t0, summary.t0, 1e-12) {
                issues.push(format!(
                    "trajectory T0 {} differs from recomputed {}",
                    summary.t0, traj.t0
                ));
            }
        }
    }
    Ok(issues)
}

struct CsvRow {
    alpha: f64,
    k: u32,
    eps: f64,
    l2_error: f64,
    effort_cum: f64,
}

fn parse_bench_csv(dir: &Path) -> Result<Vec<CsvRow>> {
    let path = dir.join(BENCH_FILE);
    let text = std::fs::read_to_string(&path)
        .map_err(|e| MissingArtifacts(format!("{}: {e}", path.display())))?;
    let bad = |line: usize| MissingArtifacts(format!("{}: malformed line {line}", path.display()));
    let mut lines = text.lines();
    if lines.next().map_or(true, |h| {
        !h.starts_with("alpha,k,eps,l2_error,effort_level,effort_cum")
    }) {
        return Err(bad(1).into());
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() < 6 {
            return Err(bad(i + 2).into());
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(i + 2));
        rows.push(CsvRow {
            alpha: num(f[0])?,
            k: f[1].parse().map_err(|_| bad(i + 2))?,
            eps: num(f[2])?,
            l2_error: num(f[3])?,
            effort_cum: num(f[5])?,
        });
    }
    Ok(rows)
}

fn verify_bench(dir: &Path, record: &RatesRecord) -> Result<Vec<String>> {
    let rows = parse_bench_csv(dir)?;
    let mut issues = Vec::new();
    let (k_min, k_max) = (record.config.k_min as u32, record.config.k_max as u32);
    for case in &record.cases {
        let mine: Vec<&CsvRow> = rows
            .iter()
            .filter(|r| r.alpha == case.alpha && r.k >= k_min && r.k <= k_max)
            .collect();
        if mine.len() != (k_max - k_min + 1) as usize {
            issues.push(format!(
                "alpha {}: expected {} rows in range",
                case.alpha,
                k_max - k_min + 1
            ));
            continue;
        }
        let mut compare = |name: &str,
                           fit: &Option<maupertuis::bench::RateFit>,
                           samples: Vec<(f64, f64)>,
                           invert: bool| {
            let Some(fit) = fit else { return };
            match fit_rate(&samples) {
                Ok(refit) => {
                    let e = if invert {
                        -refit.exponent
                    } else {
                        refit.exponent
                    };
                    if !close(e, fit.exponent, 1e-9) || !close(refit.r_squared, fit.r_squared, 1e-9)
                    {
                        issues.push(format!(
                            "alpha {}: {name} fit differs ({e} vs {})",
                            case.alpha, fit.exponent
                        ));
                    }
                }
                Err(err) => issues.push(format!("alpha {}: {name} fit: {err}", case.alpha)),
            }
        };
        compare(
            "error",
            &case.error_fit,
            mine.iter().map(|r| (r.eps, r.l2_error)).collect(),
            false,
        );
        compare(
            "effort",
            &case.effort_fit,
            mine.iter().map(|r| (r.eps, r.effort_cum)).collect(),
            true,
        );
        let expected = crate::bench::window_violations(
            case.flat,
            &case.error_fit,
            &case.effort_fit,
            &record.config.windows,
        );
        if expected.is_empty() != case.within_windows {
            issues.push(format!(
                "alpha {}: window verdict disagrees with the fits",
                case.alpha
            ));
        }
    }
    if record.all_within_windows != record.cases.iter().all(|c| c.within_windows) {
        issues.push("overall window verdict disagrees with the cases".into());
    }
    Ok(issues)
}

pub fn report(dir: &Path) -> Result<String> {
    Ok(match load(dir)? {
        Artifacts::Run(r) => report_run(&r),
        Artifacts::Bench(r) => report_bench(&r),
    })
}

fn report_run(r: &RunRecord) -> String {
    let c = &r.certificate;
    let s = &r.schedule;
    let mut out = String::new();
    let _ = writeln!(out, "certificate");
    let _ = writeln!(out, "  N          {:.6e}", c.n_bound);
    let _ = writeln!(out, "  ell0       {:.6e}", c.ell0);
    let _ = writeln!(out, "  ell        {:.6e}", c.ell);
    let _ = writeln!(out, "  eps_max    {:.6e}", c.eps_max);
    let _ = writeln!(out, "  region ok  {}", c.region_ok);
    let _ = writeln!(out, "  admissible {}", c.admissible());
    let _ = writeln!(out, "  forced     {}", r.forced);
    let _ = writeln!(
        out,
        "schedule: M0 = {}, k_max = {}, eps0 = {:.6e}, zeta0 = {:.6e}, stop_tol = {:.3e}",
        s.m0, s.k_max, s.eps0, s.zeta0, s.stop_tol
    );
    let _ = writeln!(
        out,
        "{:>3} {:>7} {:>12} {:>20} {:>10} {:>12} {:>12} {:>12} {:>12}",
        "k", "M", "eps", "length", "effort", "sup_first", "sup_second", "residual", "l2_delta"
    );
    for l in &r.levels {
        let delta = l
            .l2_delta_to_previous
            .map_or("-".to_string(), |d| format!("{d:.4e}"));
        let _ = writeln!(
            out,
            "{:>3} {:>7} {:>12.4e} {:>20.14} {:>10} {:>12.4e} {:>12.4e} {:>12.4e} {:>12}",
            l.k,
            l.m,
            l.eps,
            l.length,
            l.birkhoff.affirmative_steps,
            l.sup_first,
            l.sup_second,
            l.weak_residual,
            delta
        );
    }
    let _ = writeln!(out, "converged  {}", r.converged);
    if let Some(fit) = &r.self_convergence {
        let _ = writeln!(
            out,
            "self-convergence exponent {:.4} (r^2 {:.4})",
            fit.exponent, fit.r_squared
        );
    }
    if !r.dynamics.is_empty() {
        let _ = writeln!(
            out,
            "{:>3} {:>20} {:>12} {:>12}",
            "k", "T0", "drift", "newton"
        );
        for d in &r.dynamics {
            let _ = writeln!(
                out,
                "{:>3} {:>20.14} {:>12.4e} {:>12.4e}",
                d.k, d.t0, d.diagnostics.max_energy_drift, d.diagnostics.max_newton_residual
            );
        }
    }
    match &r.trajectory {
        Some(t) => {
            let _ = writeln!(out, "T0 = {:.14}", t.t0);
            let _ = writeln!(out, "energy drift   {:.4e}", t.diagnostics.max_energy_drift);
            let _ = writeln!(
                out,
                "newton residual {:.4e}",
                t.diagnostics.max_newton_residual
            );
        }
        None => {
            let _ = writeln!(out, "no time recovery (metric given by its exponent)");
        }
    }
    out
}

fn report_bench(r: &RatesRecord) -> String {
    let mut out = String::new();
    let fmt = |f: &Option<maupertuis::bench::RateFit>| {
        f.as_ref().map_or("-".to_string(), |f| {
            format!("{:.4} (r^2 {:.4})", f.exponent, f.r_squared)
        })
    };
    let _ = writeln!(
        out,
        "k = {}..{}, ell_total = {}, M0 = {}",
        r.config.k_min, r.config.k_max, r.config.ell_total, r.config.m0
    );
    let _ = writeln!(
        out,
        "{:>8} {:>22} {:>22} {:>22} {:>8}",
        "alpha", "error", "effort", "travel", "ok"
    );
    let mut violations = BTreeMap::new();
    for c in &r.cases {
        let _ = writeln!(
            out,
            "{:>8} {:>22} {:>22} {:>22} {:>8}",
            c.alpha,
            if c.flat {
                "flat".to_string()
            } else {
                fmt(&c.error_fit)
            },
            fmt(&c.effort_fit),
            fmt(&c.travel_fit),
            c.within_windows
        );
        if !c.violations.is_empty() {
            violations.insert(c.alpha.to_string(), c.violations.join("; "));
        }
    }
    for (alpha, v) in violations {
        let _ = writeln!(out, "alpha {alpha}: {v}");
    }
    let _ = writeln!(out, "all within windows: {}", r.all_within_windows);
    out
}
