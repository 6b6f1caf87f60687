//! Dyadic refinement: midpoint embedding, `ζ_k = ζ_{k-1}/6`, one Birkhoff map
//! per level, and per-level diagnostics.

use serde::{Deserialize, Serialize};

use crate::birkhoff::{
    birkhoff_map, check_admissible, default_region, AdmissibilityCertificate, BirkhoffOptions,
    BirkhoffReport,
};
use crate::error::{Error, Result};
use crate::metric::{dot, Aabb, MetricField};
use crate::polygon::{difference_profile, polygon_length, LocalFrame, Polygon};

/// Hölder exponent reached by the `ζ_k = ε_k^{2+α}` scaling, `log 6 / log 2 − 2`.
pub fn holder_alpha() -> f64 {
    6f64.ln() / 2f64.ln() - 2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefinementSchedule {
    /// Cells on each side of the midpoint at level 0.
    #[serde(rename = "M0")]
    pub m0: usize,
    pub k_max: u32,
    /// Stop once the L² change between levels drops below this; defaults
    /// to `1e-8 ℓ`.
    #[serde(default)]
    pub stop_tol: Option<f64>,
    /// Level-0 normal spacing; defaults to `ε₀³`.
    #[serde(default)]
    pub zeta0: Option<f64>,
}

impl RefinementSchedule {
    pub fn new(m0: usize, k_max: u32) -> Self {
        RefinementSchedule {
            m0,
            k_max,
            stop_tol: None,
            zeta0: None,
        }
    }

    /// Smallest `M₀` with `ℓ / M₀ ≤ eps_max`.
    pub fn auto_m0(ell: f64, eps_max: f64) -> usize {
        ((ell / eps_max).ceil() as usize).max(1)
    }

    pub fn eps0(&self, ell: f64) -> f64 {
        ell / self.m0 as f64
    }

    pub fn zeta0(&self, ell: f64) -> f64 {
        self.zeta0.unwrap_or_else(|| self.eps0(ell).powi(3))
    }

    pub fn stop_tol(&self, ell: f64) -> f64 {
        self.stop_tol.unwrap_or(1e-8 * ell)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m0 == 0 {
            return Err(Error::invalid("M0", "must be a positive integer"));
        }
        if let Some(z) = self.zeta0 {
            if !(z > 0.0 && z.is_finite()) {
                return Err(Error::invalid("zeta0", "must be positive"));
            }
        }
        if let Some(t) = self.stop_tol {
            if !(t >= 0.0) {
                return Err(Error::invalid("stop_tol", "must be nonnegative"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RefineOptions {
    pub max_steps: u64,
    /// Overrides the certificate's `ε₀` gate.
    pub eps_max: Option<f64>,
    /// Region `P` for the admissibility check; defaults to [`default_region`].
    pub region: Option<Aabb>,
    /// Run even when the endpoints are not admissible.
    pub force: bool,
    pub record_history: bool,
    /// Number of hat test functions for the weak residual; all interior
    /// nodes by default.
    pub n_test: Option<usize>,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions {
            max_steps: 10_000_000,
            eps_max: None,
            region: None,
            force: false,
            record_history: false,
            n_test: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelStats {
    pub k: u32,
    #[serde(rename = "M")]
    pub m: usize,
    pub eps: f64,
    pub zeta: f64,
    pub zeta_six_power: u32,
    pub length: f64,
    pub birkhoff: BirkhoffReport,
    /// L² norm of the change from the embedded previous level.
    pub l2_delta_to_previous: Option<f64>,
    pub weak_residual: f64,
    pub sup_first: f64,
    pub sup_second: f64,
    /// `sup |pq''|` of the piecewise quadratic interpolant.
    pub pq_second_sup: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementRun {
    pub certificate: AdmissibilityCertificate,
    pub forced: bool,
    pub schedule: RefinementSchedule,
    pub levels: Vec<LevelStats>,
    /// Whether the run stopped on the L² tolerance before `k_max`.
    pub converged: bool,
    pub final_polygon: Polygon,
}

impl RefinementRun {
    pub fn total_steps(&self) -> u64 {
        self.levels
            .iter()
            .map(|l| l.birkhoff.affirmative_steps)
            .sum()
    }
}

/// Doubles `M`: even nodes keep their vertex, odd nodes take the midpoint.
/// Lattice coordinates are rescaled to `ζ / 6`, so the midpoints
/// `3 (a + b)` are exact.
pub fn embed_midpoints(polygon: &Polygon) -> Result<Polygon> {
    let k = polygon.normals();
    let m = polygon.m();
    let mut lattice = Vec::with_capacity((4 * m + 1) * k);
    for i in 0..=2 * m {
        let here = polygon.offset(i);
        for &a in here {
            lattice.push(a.checked_mul(6).ok_or(Error::LatticeOverflow)?);
        }
        if i < 2 * m {
            for (&a, &b) in here.iter().zip(polygon.offset(i + 1)) {
                let mid = a
                    .checked_add(b)
                    .and_then(|s| s.checked_mul(3))
                    .ok_or(Error::LatticeOverflow)?;
                lattice.push(mid);
            }
        }
    }
    Ok(polygon.with_lattice(2 * m, polygon.spacing().refined(), lattice))
}

/// Exact L² distance between the piecewise linear interpolants of `coarse`
/// (one level up) and `fine`.
pub fn l2_delta(coarse: &Polygon, fine: &Polygon) -> Result<f64> {
    let embedded = embed_midpoints(coarse)?;
    if embedded.m() != fine.m() || embedded.spacing() != fine.spacing() {
        return Err(Error::invalid("polygon", "levels are not consecutive"));
    }
    let z = fine.zeta();
    let eps = fine.eps();
    let k = fine.normals();
    let diff: Vec<f64> = embedded
        .lattice()
        .iter()
        .zip(fine.lattice())
        .map(|(a, b)| (b - a) as f64 * z)
        .collect();
    let mut sum = 0.0;
    for i in 0..2 * fine.m() {
        for c in 0..k {
            let (a, b) = (diff[i * k + c], diff[(i + 1) * k + c]);
            sum += eps / 3.0 * (a * a + a * b + b * b);
        }
    }
    Ok(sum.sqrt())
}

/// Piecewise constant, linear, and C¹ piecewise quadratic interpolants of a
/// polygon's normal offsets over `[-ℓ, ℓ]`.
#[derive(Debug, Clone)]
pub struct Interpolants {
    ell: f64,
    eps: f64,
    m: usize,
    ys: Vec<Vec<f64>>,
    /// Nodal slopes of the quadratic.
    slopes: Vec<Vec<f64>>,
    /// Per cell, the left and right half curvatures `c₋, c₊`.
    curvatures: Vec<(Vec<f64>, Vec<f64>)>,
}

impl Interpolants {
    pub fn new(polygon: &Polygon) -> Self {
        let m = polygon.m();
        let eps = polygon.eps();
        let ys: Vec<Vec<f64>> = (0..polygon.vertex_count()).map(|i| polygon.y(i)).collect();
        let z = polygon.zeta();
        let k = polygon.normals();
        let delta =
            |i: usize, c: usize| (polygon.offset(i + 1)[c] - polygon.offset(i)[c]) as f64 * z;

        let slopes: Vec<Vec<f64>> = (0..=2 * m)
            .map(|i| {
                (0..k)
                    .map(|c| {
                        if i == 0 {
                            delta(0, c) / eps
                        } else if i == 2 * m {
                            delta(2 * m - 1, c) / eps
                        } else {
                            (delta(i, c) + delta(i - 1, c)) / (2.0 * eps)
                        }
                    })
                    .collect()
            })
            .collect();

        let h = 0.5 * eps;
        let curvatures = (0..2 * m)
            .map(|i| {
                let mut minus = vec![0.0; k];
                let mut plus = vec![0.0; k];
                for c in 0..k {
                    let (b0, b1) = (slopes[i][c], slopes[i + 1][c]);
                    let diff = (delta(i, c) - (b0 + b1) * h) / (h * h);
                    let sum = (b1 - b0) / (2.0 * h);
                    minus[c] = 0.5 * (sum + diff);
                    plus[c] = 0.5 * (sum - diff);
                }
                (minus, plus)
            })
            .collect();

        Interpolants {
            ell: polygon.frame().ell(),
            eps,
            m,
            ys,
            slopes,
            curvatures,
        }
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    fn node_x(&self, i: usize) -> f64 {
        self.ell * (i as f64 - self.m as f64) / self.m as f64
    }

    fn cell(&self, x: f64) -> usize {
        let s = (x + self.ell) / self.eps;
        (s.floor().max(0.0) as usize).min(2 * self.m - 1)
    }

    /// Value of the nearest vertex.
    pub fn pc(&self, x: f64) -> Vec<f64> {
        let s = ((x + self.ell) / self.eps)
            .round()
            .clamp(0.0, (2 * self.m) as f64);
        self.ys[s as usize].clone()
    }

    pub fn pl(&self, x: f64) -> Vec<f64> {
        let i = self.cell(x);
        let t = (x - self.node_x(i)) / self.eps;
        self.ys[i]
            .iter()
            .zip(&self.ys[i + 1])
            .map(|(a, b)| a + t * (b - a))
            .collect()
    }

    pub fn pl_slope(&self, x: f64) -> Vec<f64> {
        let i = self.cell(x);
        self.ys[i]
            .iter()
            .zip(&self.ys[i + 1])
            .map(|(a, b)| (b - a) / self.eps)
            .collect()
    }

    /// Value, first and second derivative of the quadratic at `x`.
    pub fn pq_jet(&self, x: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let i = self.cell(x);
        let x0 = self.node_x(i);
        let x1 = self.node_x(i + 1);
        let (minus, plus) = &self.curvatures[i];
        let k = minus.len();
        let (mut v, mut d, mut dd) = (vec![0.0; k], vec![0.0; k], vec![0.0; k]);
        if x - x0 <= 0.5 * self.eps {
            let t = x - x0;
            for c in 0..k {
                v[c] = self.ys[i][c] + self.slopes[i][c] * t + minus[c] * t * t;
                d[c] = self.slopes[i][c] + 2.0 * minus[c] * t;
                dd[c] = 2.0 * minus[c];
            }
        } else {
            let u = x - x1;
            for c in 0..k {
                v[c] = self.ys[i + 1][c] + self.slopes[i + 1][c] * u + plus[c] * u * u;
                d[c] = self.slopes[i + 1][c] + 2.0 * plus[c] * u;
                dd[c] = 2.0 * plus[c];
            }
        }
        (v, d, dd)
    }

    pub fn pq(&self, x: f64) -> Vec<f64> {
        self.pq_jet(x).0
    }

    pub fn pq_slope(&self, x: f64) -> Vec<f64> {
        self.pq_jet(x).1
    }

    /// `sup |pq''|` over all half cells, componentwise.
    pub fn pq_second_sup(&self) -> f64 {
        self.curvatures
            .iter()
            .flat_map(|(a, b)| a.iter().chain(b))
            .fold(0.0f64, |acc, c| acc.max(2.0 * c.abs()))
    }
}

/// Residual of the weak geodesic equation for the polygon.
///
/// For unit hats `y` at `n_test` equispaced interior nodes, evaluates
/// `∫ y ∇_N e^h √(1+|f'|²) + e^h f'·y' / √(1+|f'|²) dx` with `f'` from the
/// piecewise linear interpolant and `e^h` taken at `(x, pq(x))`, by the
/// midpoint rule on each cell. Returns the largest component in absolute value.
pub fn weak_residual(metric: &MetricField, polygon: &Polygon, n_test: usize) -> Result<f64> {
    if n_test == 0 {
        return Err(Error::invalid("n_test", "need at least one test function"));
    }
    let interp = Interpolants::new(polygon);
    let frame = polygon.frame();
    let m = polygon.m();
    let eps = polygon.eps();
    let k = polygon.normals();

    // per cell: (∇_N e^h P_F, e^h F) at the cell midpoint
    let mut cells: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(2 * m);
    for i in 0..2 * m {
        let x = 0.5 * (polygon.x(i) + polygon.x(i + 1));
        let slope = interp.pl_slope(x);
        let pf = (1.0 + dot(&slope, &slope)).sqrt();
        let world = frame.to_world(x, &interp.pq(x));
        let (h, grad) = metric.metric_exponent(&world)?;
        let eh = h.exp();
        let normal_grad: Vec<f64> = (1..=k).map(|a| eh * dot(&grad, frame.axis(a))).collect();
        cells.push((
            normal_grad.iter().map(|g| g * pf).collect(),
            slope.iter().map(|s| eh * s / pf).collect(),
        ));
    }

    let interior = 2 * m - 1;
    let mut nodes: Vec<usize> = (1..=n_test)
        .map(|s| {
            ((s as f64 * 2.0 * m as f64 / (n_test + 1) as f64).round() as usize).clamp(1, interior)
        })
        .collect();
    nodes.dedup();

    let mut worst = 0.0f64;
    for &i in &nodes {
        for c in 0..k {
            // left cell: y = 1/2, y' = 1/ε; right cell: y = 1/2, y' = -1/ε
            let left = &cells[i - 1];
            let right = &cells[i];
            let r = eps * (0.5 * left.0[c] + left.1[c] / eps)
                + eps * (0.5 * right.0[c] - right.1[c] / eps);
            worst = worst.max(r.abs());
        }
    }
    Ok(worst)
}

/// Dyadic refinement from the straight segment.
pub fn run_refinement(
    metric: &MetricField,
    q_a: &[f64],
    q_b: &[f64],
    schedule: &RefinementSchedule,
    options: &RefineOptions,
) -> Result<RefinementRun> {
    run_refinement_observed(metric, q_a, q_b, schedule, options, &mut |_, _| {})
}

/// As [`run_refinement`], handing each finished level to `observer`.
pub fn run_refinement_observed(
    metric: &MetricField,
    q_a: &[f64],
    q_b: &[f64],
    schedule: &RefinementSchedule,
    options: &RefineOptions,
    observer: &mut dyn FnMut(&LevelStats, &Polygon),
) -> Result<RefinementRun> {
    schedule.validate()?;
    let frame = LocalFrame::new(q_a, q_b)?;
    let region = match &options.region {
        Some(r) => r.clone(),
        None => default_region(metric, q_a, q_b)?,
    };
    let mut certificate = check_admissible(metric, q_a, q_b, &region)?;
    if let Some(e) = options.eps_max {
        certificate.eps_max = e;
    }
    let ell = frame.ell();
    let eps0 = schedule.eps0(ell);
    if !options.force {
        if certificate.ell > certificate.ell0 {
            return Err(Error::NotAdmissible(format!(
                "half-separation {} exceeds ell0 = {}",
                certificate.ell, certificate.ell0
            )));
        }
        if !certificate.region_ok {
            return Err(Error::NotAdmissible(
                "the parabolic region of the chord leaves the region P".into(),
            ));
        }
        if eps0 > certificate.eps_max {
            return Err(Error::NotAdmissible(format!(
                "eps0 = {eps0} exceeds the gate eps_max = {}",
                certificate.eps_max
            )));
        }
    }

    let n_bound = certificate.n_bound;
    let birkhoff_options = BirkhoffOptions {
        max_steps: options.max_steps,
        record_history: options.record_history,
        class_bound: Some(n_bound),
        ..Default::default()
    };
    let stop_tol = schedule.stop_tol(ell);

    let mut levels = Vec::new();
    let mut previous: Option<Polygon> = None;
    let mut current = Polygon::straight(frame, schedule.m0, schedule.zeta0(ell))?;
    let mut converged = false;
    for k in 0..=schedule.k_max {
        if let Some(prev) = &previous {
            current = embed_midpoints(prev)?;
        }
        let result = birkhoff_map(metric, current, &birkhoff_options)?;
        let polygon = result.polygon;
        let profile = difference_profile(&polygon);
        let interp = Interpolants::new(&polygon);
        let l2 = match &previous {
            Some(prev) => Some(l2_delta(prev, &polygon)?),
            None => None,
        };
        let n_test = options.n_test.unwrap_or(2 * polygon.m() - 1).max(1);
        let stats = LevelStats {
            k,
            m: polygon.m(),
            eps: polygon.eps(),
            zeta: polygon.zeta(),
            zeta_six_power: polygon.spacing().six_power,
            length: polygon_length(metric, &polygon)?,
            birkhoff: result.report,
            l2_delta_to_previous: l2,
            weak_residual: weak_residual(metric, &polygon, n_test)?,
            sup_first: profile.sup_first,
            sup_second: profile.sup_second_inf,
            pq_second_sup: interp.pq_second_sup(),
        };
        observer(&stats, &polygon);
        levels.push(stats);
        current = polygon.clone();
        previous = Some(polygon);
        if l2.is_some_and(|d| d < stop_tol) {
            converged = true;
            break;
        }
    }

    Ok(RefinementRun {
        certificate,
        forced: options.force,
        schedule: schedule.clone(),
        levels,
        converged,
        final_polygon: current,
    })
}
