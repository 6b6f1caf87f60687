//! Exponential-metric benchmark with a closed-form geodesic.
//!
//! For `h(x, y) = −α n·y` the geodesic between `(±ℓ/2, 0)` is the graph of
//! `n φ(x)` with `φ(x) = ln(cos αx / cos(αℓ/2)) / α`.

use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{dot, Aabb, Linear, MetricField};
use crate::polygon::Polygon;
use crate::refine::{run_refinement_observed, Interpolants, RefineOptions, RefinementSchedule};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentialCase {
    pub alpha: f64,
    /// Unit vector in the normal space `ℝ^{n-1}`.
    pub direction: Vec<f64>,
    /// Full endpoint separation; endpoints sit at `x = ±ell_total/2`.
    pub ell_total: f64,
    pub k_min: u32,
    pub k_max: u32,
}

impl ExponentialCase {
    pub fn planar(alpha: f64, ell_total: f64, k_min: u32, k_max: u32) -> Self {
        ExponentialCase {
            alpha,
            direction: vec![1.0],
            ell_total,
            k_min,
            k_max,
        }
    }

    pub fn dim(&self) -> usize {
        self.direction.len() + 1
    }

    /// Half separation, the `ℓ` of the local frame.
    pub fn ell(&self) -> f64 {
        0.5 * self.ell_total
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid("alpha", "must be positive"));
        }
        if !(self.ell_total > 0.0 && self.ell_total.is_finite()) {
            return Err(Error::invalid("ell_total", "must be positive"));
        }
        if self.direction.is_empty()
            || (dot(&self.direction, &self.direction).sqrt() - 1.0).abs() > 1e-12
        {
            return Err(Error::invalid("direction", "must be a unit vector"));
        }
        if self.k_min > self.k_max {
            return Err(Error::invalid("k_range", "k_min exceeds k_max"));
        }
        if self.alpha * self.ell() >= FRAC_PI_2 {
            return Err(Error::OutOfDomain(format!(
                "alpha * ell_total / 2 = {} must stay below pi/2",
                self.alpha * self.ell()
            )));
        }
        Ok(())
    }

    pub fn endpoints(&self) -> (Vec<f64>, Vec<f64>) {
        let mut a = vec![0.0; self.dim()];
        let mut b = vec![0.0; self.dim()];
        a[0] = -self.ell();
        b[0] = self.ell();
        (a, b)
    }

    /// The metric `e^{−2α n·y} δ`, on a box that contains the geodesic.
    pub fn metric(&self) -> Result<MetricField> {
        self.validate()?;
        let mut dir = vec![0.0];
        dir.extend_from_slice(&self.direction);
        let peak = phi(self.alpha, self.ell(), 0.0);
        let half = 2.0 * self.ell() + peak + 1.0;
        MetricField::direct(
            Linear::exponent(self.alpha, &dir),
            Aabb::cube(self.dim(), half),
        )
    }
}

fn phi(alpha: f64, ell: f64, x: f64) -> f64 {
    ((alpha * x).cos() / (alpha * ell).cos()).ln() / alpha
}

/// `n φ(x)` for `|x| ≤ ℓ/2`.
pub fn analytic_geodesic(case: &ExponentialCase, x: f64) -> Result<Vec<f64>> {
    case.validate()?;
    if x.abs() > case.ell() * (1.0 + 1e-12) {
        return Err(Error::OutOfDomain(format!(
            "x = {x} lies outside [-ℓ/2, ℓ/2]"
        )));
    }
    let p = phi(case.alpha, case.ell(), x);
    Ok(case.direction.iter().map(|d| d * p).collect())
}

/// L² distance between the polygon's piecewise linear graph and the
/// analytic geodesic, by composite Simpson with 8 subintervals per cell.
pub fn l2_error(polygon: &Polygon, case: &ExponentialCase) -> Result<f64> {
    case.validate()?;
    let frame = polygon.frame();
    if polygon.normals() != case.direction.len() {
        return Err(Error::DimensionMismatch {
            expected: case.direction.len(),
            got: polygon.normals(),
        });
    }
    if (frame.ell() - case.ell()).abs() > 1e-12 * case.ell() {
        return Err(Error::invalid(
            "polygon",
            "endpoints differ from the benchmark case",
        ));
    }
    if frame.origin().iter().any(|&o| o.abs() > 1e-12) || (frame.axis(0)[0] - 1.0).abs() > 1e-12 {
        return Err(Error::invalid(
            "polygon",
            "frame is not aligned with the benchmark axes",
        ));
    }
    let interp = Interpolants::new(polygon);
    let n = frame.dim();
    let error_sq = |x: f64| -> f64 {
        let y = interp.pl(x);
        let world = frame.to_world(x, &y);
        let p = phi(case.alpha, case.ell(), x);
        (1..n)
            .map(|c| {
                let d = world[c] - case.direction[c - 1] * p;
                d * d
            })
            .sum()
    };
    Ok(simpson_cells(polygon, 8, error_sq).sqrt())
}

/// `∫ f` over `[-ℓ, ℓ]` by composite Simpson, `sub` (even) panels per cell.
fn simpson_cells(polygon: &Polygon, sub: usize, f: impl Fn(f64) -> f64) -> f64 {
    let mut total = 0.0;
    for i in 0..2 * polygon.m() {
        let (a, b) = (polygon.x(i), polygon.x(i + 1));
        let h = (b - a) / sub as f64;
        let mut s = f(a) + f(b);
        for t in 1..sub {
            s += if t % 2 == 1 { 4.0 } else { 2.0 } * f(a + t as f64 * h);
        }
        total += s * h / 3.0;
    }
    total
}

/// Least-squares fit of `log value = m log ε + c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub exponent: f64,
    pub r_squared: f64,
    /// `(log ε, log value)` pairs used in the fit.
    pub points: Vec<(f64, f64)>,
}

/// Fits a power law through `(ε, value)` samples; returns the slope in log-log.
pub fn fit_rate(samples: &[(f64, f64)]) -> Result<RateFit> {
    if samples.len() < 2 {
        return Err(Error::invalid(
            "k_range",
            "a rate fit needs at least two levels",
        ));
    }
    if samples.iter().any(|&(e, v)| !(e > 0.0) || !(v > 0.0)) {
        return Err(Error::invalid(
            "samples",
            "log-log fit needs positive values",
        ));
    }
    let points: Vec<(f64, f64)> = samples.iter().map(|&(e, v)| (e.ln(), v.ln())).collect();
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("samples", "all grid spacings coincide"));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(RateFit {
        exponent: slope,
        r_squared,
        points,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub alpha: f64,
    pub k: u32,
    pub eps: f64,
    pub l2_error: f64,
    pub effort_level: u64,
    pub effort_cum: u64,
    /// Cumulative largest single-vertex travel in grid moves.
    pub travel_cum: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub case: ExponentialCase,
    pub rows: Vec<BenchRow>,
    /// Error exponent `m` in `error ∝ ε^m`.
    pub error_fit: Option<RateFit>,
    /// Effort exponent `m` in `effort ∝ ε^{-m}`.
    pub effort_fit: Option<RateFit>,
    /// Rate of the cumulative largest vertex travel, a sweep count proxy.
    pub travel_fit: Option<RateFit>,
    /// Every error in range is at most the flat tolerance; no rate is fitted.
    pub flat: bool,
    pub weak_residuals: Vec<f64>,
    pub sup_first: Vec<f64>,
    pub sup_second: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BenchOptions {
    /// Cells per side at level 0; `ε_k = ℓ / (M0 2^k)`.
    pub m0: usize,
    /// Errors at or below this count as exact.
    pub flat_tolerance: f64,
    pub max_steps: u64,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            m0: 1,
            flat_tolerance: 1e-9,
            max_steps: 100_000_000,
        }
    }
}

/// Runs every case in parallel and fits error and effort rates over each
/// case's `k` range.
pub fn run_benchmark(cases: &[ExponentialCase], options: &BenchOptions) -> Result<Vec<CaseResult>> {
    cases.par_iter().map(|c| run_case(c, options)).collect()
}

pub fn run_case(case: &ExponentialCase, options: &BenchOptions) -> Result<CaseResult> {
    case.validate()?;
    let metric = case.metric()?;
    let (q_a, q_b) = case.endpoints();
    let schedule = RefinementSchedule {
        m0: options.m0,
        k_max: case.k_max,
        stop_tol: Some(0.0),
        zeta0: None,
    };
    // the benchmark geometry is far outside the admissible range
    let refine = RefineOptions {
        max_steps: options.max_steps,
        force: true,
        n_test: None,
        ..Default::default()
    };
    let mut rows = Vec::new();
    let mut residuals = Vec::new();
    let mut sup_first = Vec::new();
    let mut sup_second = Vec::new();
    let mut cumulative = 0u64;
    let mut travel = 0u64;
    let mut failure = None;
    run_refinement_observed(
        &metric,
        &q_a,
        &q_b,
        &schedule,
        &refine,
        &mut |stats, polygon| {
            cumulative += stats.birkhoff.affirmative_steps;
            travel += stats.birkhoff.max_vertex_travel;
            residuals.push(stats.weak_residual);
            sup_first.push(stats.sup_first);
            sup_second.push(stats.sup_second);
            match l2_error(polygon, case) {
                Ok(err) => rows.push(BenchRow {
                    alpha: case.alpha,
                    k: stats.k,
                    eps: stats.eps,
                    l2_error: err,
                    effort_level: stats.birkhoff.affirmative_steps,
                    effort_cum: cumulative,
                    travel_cum: travel,
                }),
                Err(e) => failure = Some(e),
            }
        },
    )?;
    if let Some(e) = failure {
        return Err(e);
    }

    let in_range: Vec<&BenchRow> = rows
        .iter()
        .filter(|r| r.k >= case.k_min && r.k <= case.k_max)
        .collect();
    let flat = in_range
        .iter()
        .all(|r| r.l2_error <= options.flat_tolerance);
    let (error_fit, effort_fit, travel_fit) = if flat || in_range.iter().any(|r| r.effort_cum == 0)
    {
        (None, None, None)
    } else {
        let err: Vec<(f64, f64)> = in_range.iter().map(|r| (r.eps, r.l2_error)).collect();
        let inverse = |values: Vec<(f64, f64)>| -> Result<RateFit> {
            let mut fit = fit_rate(&values)?;
            fit.exponent = -fit.exponent;
            Ok(fit)
        };
        let effort = inverse(
            in_range
                .iter()
                .map(|r| (r.eps, r.effort_cum as f64))
                .collect(),
        )?;
        let travel = inverse(
            in_range
                .iter()
                .map(|r| (r.eps, r.travel_cum as f64))
                .collect(),
        )?;
        (Some(fit_rate(&err)?), Some(effort), Some(travel))
    };
    Ok(CaseResult {
        case: case.clone(),
        rows,
        error_fit,
        effort_fit,
        travel_fit,
        flat,
        weak_residuals: residuals,
        sup_first,
        sup_second,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_values() {
        let c = ExponentialCase::planar(0.9, 2.0, 1, 8);
        assert!(analytic_geodesic(&c, 1.0).unwrap()[0].abs() < 1e-15);
        assert!(analytic_geodesic(&c, -1.0).unwrap()[0].abs() < 1e-15);
        let mid = analytic_geodesic(&c, 0.0).unwrap()[0];
        assert!((mid + 0.9f64.cos().ln() / 0.9).abs() < 1e-15);
        assert!((mid - 0.528_269_381_762_016).abs() < 1e-14);
        let tiny = ExponentialCase::planar(1e-3, 2.0, 1, 8);
        assert!(analytic_geodesic(&tiny, 0.0).unwrap()[0] < 1e-3);
        assert!(matches!(
            ExponentialCase::planar(1.6, 2.0, 1, 8).validate(),
            Err(Error::OutOfDomain(_))
        ));
    }

    #[test]
    fn rate_fit_recovers_power_law() {
        let s: Vec<(f64, f64)> = (1..6)
            .map(|k| {
                let e = 0.5f64.powi(k);
                (e, 3.0 * e.powf(0.5))
            })
            .collect();
        let f = fit_rate(&s).unwrap();
        assert!((f.exponent - 0.5).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert!(fit_rate(&s[..1]).is_err());
    }
}
