//! Conformal Jacobi metrics `g = e^{2h} δ`.
//!
//! A metric is either given directly through its exponent `h`, or built from
//! a potential `V` and a total energy `E`. In the second case we normalise
//! `e^{2h} = 2(E - V)`, which is the Routhian `R(q, q') = 2(E - V)|q'|²` of
//! Jacobi's principle. The constant factor does not change geodesics and makes
//! the physical-time integral the exact arclength/speed relation.

use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Samples per axis when estimating sup-norms over a box.
pub const SUP_SAMPLES_PER_AXIS: usize = 33;

/// `E - V` at or below this value is treated as the degenerate boundary.
pub const DEGENERACY_GUARD: f64 = 1e-12;

/// A smooth scalar field on ℝⁿ together with its gradient.
pub trait ScalarField: fmt::Debug + Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, q: &[f64]) -> f64;
    fn gradient(&self, q: &[f64], grad: &mut [f64]);
}

/// The zero field.
#[derive(Debug, Clone)]
pub struct Zero {
    pub dim: usize,
}

impl ScalarField for Zero {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, _q: &[f64]) -> f64 {
        0.0
    }
    fn gradient(&self, _q: &[f64], grad: &mut [f64]) {
        grad.fill(0.0);
    }
}

/// `c · q + offset`.
#[derive(Debug, Clone)]
pub struct Linear {
    pub coeffs: Vec<f64>,
    pub offset: f64,
}

impl Linear {
    /// The exponential-metric exponent `h(q) = -alpha * (direction · q)`.
    pub fn exponent(alpha: f64, direction: &[f64]) -> Self {
        Linear {
            coeffs: direction.iter().map(|d| -alpha * d).collect(),
            offset: 0.0,
        }
    }
}

impl ScalarField for Linear {
    fn dim(&self) -> usize {
        self.coeffs.len()
    }
    fn value(&self, q: &[f64]) -> f64 {
        self.offset + dot(&self.coeffs, q)
    }
    fn gradient(&self, _q: &[f64], grad: &mut [f64]) {
        grad.copy_from_slice(&self.coeffs);
    }
}

/// Isotropic harmonic well `½ k |q - center|²`.
#[derive(Debug, Clone)]
pub struct Harmonic {
    pub stiffness: f64,
    pub center: Vec<f64>,
}

impl ScalarField for Harmonic {
    fn dim(&self) -> usize {
        self.center.len()
    }
    fn value(&self, q: &[f64]) -> f64 {
        let r2: f64 = q
            .iter()
            .zip(&self.center)
            .map(|(a, c)| (a - c) * (a - c))
            .sum();
        0.5 * self.stiffness * r2
    }
    fn gradient(&self, q: &[f64], grad: &mut [f64]) {
        for ((g, a), c) in grad.iter_mut().zip(q).zip(&self.center) {
            *g = self.stiffness * (a - c);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianWell {
    pub center: Vec<f64>,
    pub depth: f64,
    pub width: f64,
}

/// Sum of wells `-depth * exp(-|q - center|² / (2 width²))`.
#[derive(Debug, Clone)]
pub struct GaussianWells {
    pub dim: usize,
    pub wells: Vec<GaussianWell>,
}

impl ScalarField for GaussianWells {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, q: &[f64]) -> f64 {
        self.wells
            .iter()
            .map(|w| {
                let r2 = dist2(q, &w.center);
                -w.depth * (-r2 / (2.0 * w.width * w.width)).exp()
            })
            .sum()
    }
    fn gradient(&self, q: &[f64], grad: &mut [f64]) {
        grad.fill(0.0);
        for w in &self.wells {
            let s2 = w.width * w.width;
            let e = (-dist2(q, &w.center) / (2.0 * s2)).exp();
            for ((g, a), c) in grad.iter_mut().zip(q).zip(&w.center) {
                *g += w.depth * e * (a - c) / s2;
            }
        }
    }
}

type ValueFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

/// A field defined by closures; mostly useful in tests and experiments.
#[derive(Clone)]
pub struct FnField {
    dim: usize,
    value: Arc<ValueFn>,
    gradient: Arc<GradFn>,
}

impl FnField {
    pub fn new(
        dim: usize,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        FnField {
            dim,
            value: Arc::new(value),
            gradient: Arc::new(gradient),
        }
    }
}

impl fmt::Debug for FnField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnField").field("dim", &self.dim).finish()
    }
}

impl ScalarField for FnField {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, q: &[f64]) -> f64 {
        (self.value)(q)
    }
    fn gradient(&self, q: &[f64], grad: &mut [f64]) {
        (self.gradient)(q, grad)
    }
}

/// Where the metric exponent comes from.
#[derive(Debug, Clone)]
pub enum PotentialSpec {
    /// `h` supplied directly.
    DirectExponent { exponent: Arc<dyn ScalarField> },
    /// `e^{2h} = 2(E - V)`.
    FromPotential {
        potential: Arc<dyn ScalarField>,
        energy: f64,
    },
}

impl PotentialSpec {
    pub fn dim(&self) -> usize {
        match self {
            PotentialSpec::DirectExponent { exponent } => exponent.dim(),
            PotentialSpec::FromPotential { potential, .. } => potential.dim(),
        }
    }
}

/// Axis-aligned box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Aabb {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a <= b)) {
            return Err(Error::invalid(
                "box",
                "every lower corner must be <= upper corner",
            ));
        }
        Ok(Aabb { lo, hi })
    }

    /// The cube `[-half_width, half_width]^dim`.
    pub fn cube(dim: usize, half_width: f64) -> Self {
        Aabb {
            lo: vec![-half_width; dim],
            hi: vec![half_width; dim],
        }
    }

    /// The cube of half-width `radius` around `center`.
    pub fn around(center: &[f64], radius: f64) -> Self {
        Aabb {
            lo: center.iter().map(|c| c - radius).collect(),
            hi: center.iter().map(|c| c + radius).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, q: &[f64]) -> bool {
        q.iter().zip(&self.lo).zip(&self.hi).all(|((x, lo), hi)| {
            let slack = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
            *x >= lo - slack && *x <= hi + slack
        })
    }

    pub fn contains_box(&self, other: &Aabb) -> bool {
        self.contains(&other.lo) && self.contains(&other.hi)
    }

    pub fn intersect(&self, other: &Aabb) -> Option<Aabb> {
        let lo: Vec<f64> = self
            .lo
            .iter()
            .zip(&other.lo)
            .map(|(a, b)| a.max(*b))
            .collect();
        let hi: Vec<f64> = self
            .hi
            .iter()
            .zip(&other.hi)
            .map(|(a, b)| a.min(*b))
            .collect();
        lo.iter()
            .zip(&hi)
            .all(|(a, b)| a <= b)
            .then_some(Aabb { lo, hi })
    }

    /// Deterministic tensor grid with `per_axis` samples along every axis
    /// (a single centre sample on a degenerate axis).
    pub fn grid(&self, per_axis: usize) -> GridIter<'_> {
        let per_axis = per_axis.max(1);
        GridIter {
            bounds: self,
            per_axis,
            index: vec![0; self.dim()],
            done: self.dim() == 0,
        }
    }

    fn grid_coord(&self, axis: usize, i: usize, per_axis: usize) -> f64 {
        let (lo, hi) = (self.lo[axis], self.hi[axis]);
        if per_axis == 1 || lo == hi {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * i as f64 / (per_axis - 1) as f64
        }
    }
}

pub struct GridIter<'a> {
    bounds: &'a Aabb,
    per_axis: usize,
    index: Vec<usize>,
    done: bool,
}

impl Iterator for GridIter<'_> {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        if self.done {
            return None;
        }
        let point = self
            .index
            .iter()
            .enumerate()
            .map(|(axis, &i)| self.bounds.grid_coord(axis, i, self.per_axis))
            .collect();
        // odometer increment
        let mut axis = 0;
        loop {
            if axis == self.index.len() {
                self.done = true;
                break;
            }
            self.index[axis] += 1;
            if self.index[axis] < self.per_axis {
                break;
            }
            self.index[axis] = 0;
            axis += 1;
        }
        Some(point)
    }
}

/// Constants that gate the algorithm on a region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureBound {
    /// `N = 3 (4 + 5 S)` with `S = max(sup|∇h|, sup|∇e^h|)`.
    pub n: f64,
    pub sup_grad_h: f64,
    pub sup_grad_exp_h: f64,
}

/// The Jacobi metric on an evaluation box. Immutable after construction.
#[derive(Debug)]
pub struct MetricField {
    source: PotentialSpec,
    domain: Aabb,
    sup_grad_exp_h: OnceLock<f64>,
}

impl Clone for MetricField {
    fn clone(&self) -> Self {
        MetricField {
            source: self.source.clone(),
            domain: self.domain.clone(),
            sup_grad_exp_h: self.sup_grad_exp_h.clone(),
        }
    }
}

impl MetricField {
    pub fn new(source: PotentialSpec, domain: Aabb) -> Result<Self> {
        let dim = source.dim();
        if dim < 2 {
            return Err(Error::invalid(
                "dim",
                "the configuration space needs n >= 2",
            ));
        }
        if domain.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: domain.dim(),
            });
        }
        if let PotentialSpec::FromPotential { energy, .. } = &source {
            if !energy.is_finite() {
                return Err(Error::invalid("energy", "must be finite"));
            }
        }
        Ok(MetricField {
            source,
            domain,
            sup_grad_exp_h: OnceLock::new(),
        })
    }

    /// `h = 0` on the given box.
    pub fn flat(domain: Aabb) -> Self {
        let dim = domain.dim();
        Self::new(
            PotentialSpec::DirectExponent {
                exponent: Arc::new(Zero { dim }),
            },
            domain,
        )
        .expect("flat metric on a valid box")
    }

    /// Directly supplied exponent.
    pub fn direct(exponent: impl ScalarField + 'static, domain: Aabb) -> Result<Self> {
        Self::new(
            PotentialSpec::DirectExponent {
                exponent: Arc::new(exponent),
            },
            domain,
        )
    }

    /// Jacobi metric of potential `V` at energy `E`.
    pub fn from_potential(
        potential: impl ScalarField + 'static,
        energy: f64,
        domain: Aabb,
    ) -> Result<Self> {
        Self::new(
            PotentialSpec::FromPotential {
                potential: Arc::new(potential),
                energy,
            },
            domain,
        )
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &Aabb {
        &self.domain
    }

    pub fn source(&self) -> &PotentialSpec {
        &self.source
    }

    /// Energy and potential, when the metric was built from a potential.
    pub fn potential(&self) -> Option<(&dyn ScalarField, f64)> {
        match &self.source {
            PotentialSpec::FromPotential { potential, energy } => {
                Some((potential.as_ref(), *energy))
            }
            PotentialSpec::DirectExponent { .. } => None,
        }
    }

    fn check_domain(&self, q: &[f64]) -> Result<()> {
        if q.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: q.len(),
            });
        }
        if !self.domain.contains(q) {
            return Err(Error::DomainViolation {
                point: q.to_vec(),
                reason: "outside the evaluation box".into(),
            });
        }
        Ok(())
    }

    /// `2(E - V(q))`, checked against the degeneracy guard.
    fn kinetic_factor(&self, potential: &dyn ScalarField, energy: f64, q: &[f64]) -> Result<f64> {
        let gap = energy - potential.value(q);
        if !(gap > DEGENERACY_GUARD) {
            return Err(Error::DomainViolation {
                point: q.to_vec(),
                reason: format!("E - V = {gap:e}, the metric degenerates"),
            });
        }
        Ok(2.0 * gap)
    }

    /// `h(q)` and `∇h(q)`.
    pub fn metric_exponent(&self, q: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check_domain(q)?;
        let mut grad = vec![0.0; self.dim()];
        let h = match &self.source {
            PotentialSpec::DirectExponent { exponent } => {
                exponent.gradient(q, &mut grad);
                exponent.value(q)
            }
            PotentialSpec::FromPotential { potential, energy } => {
                let twice_gap = self.kinetic_factor(potential.as_ref(), *energy, q)?;
                potential.gradient(q, &mut grad);
                for g in &mut grad {
                    *g = -*g / twice_gap;
                }
                0.5 * twice_gap.ln()
            }
        };
        Ok((h, grad))
    }

    /// The conformal factor `e^{h(q)}`.
    pub fn exp_h(&self, q: &[f64]) -> Result<f64> {
        self.check_domain(q)?;
        match &self.source {
            PotentialSpec::DirectExponent { exponent } => Ok(exponent.value(q).exp()),
            PotentialSpec::FromPotential { potential, energy } => {
                Ok(self.kinetic_factor(potential.as_ref(), *energy, q)?.sqrt())
            }
        }
    }

    /// `∇e^h = e^h ∇h`.
    pub fn grad_exp_h(&self, q: &[f64]) -> Result<Vec<f64>> {
        let (h, mut grad) = self.metric_exponent(q)?;
        let eh = h.exp();
        for g in &mut grad {
            *g *= eh;
        }
        Ok(grad)
    }

    /// Routhian `R(q, v) = e^{2h(q)} |v|²`.
    pub fn routhian(&self, q: &[f64], v: &[f64]) -> Result<f64> {
        let eh = self.exp_h(q)?;
        Ok(eh * eh * dot(v, v))
    }

    /// `N = 3 (4 + 5 S)` over `region`, where `S` is the sampled sup of
    /// `max(|∇h|, |∇e^h|)` on a tensor grid of [`SUP_SAMPLES_PER_AXIS`] points
    /// per axis.
    pub fn curvature_bound(&self, region: &Aabb) -> Result<CurvatureBound> {
        if region.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: region.dim(),
            });
        }
        if !self.domain.contains_box(region) {
            return Err(Error::DomainViolation {
                point: region.lo.clone(),
                reason: "region is not inside the evaluation box".into(),
            });
        }
        let mut sup_grad_h = 0.0f64;
        let mut sup_grad_exp_h = 0.0f64;
        for q in region.grid(SUP_SAMPLES_PER_AXIS) {
            let (h, grad) = self.metric_exponent(&q)?;
            let norm = dot(&grad, &grad).sqrt();
            sup_grad_h = sup_grad_h.max(norm);
            sup_grad_exp_h = sup_grad_exp_h.max(h.exp() * norm);
        }
        Ok(CurvatureBound {
            n: curvature_constant(sup_grad_h.max(sup_grad_exp_h)),
            sup_grad_h,
            sup_grad_exp_h,
        })
    }

    /// Sampled `sup |∇e^h|` over the evaluation box, skipping degenerate
    /// sample points. Computed once.
    pub fn sup_grad_exp_h(&self) -> f64 {
        *self.sup_grad_exp_h.get_or_init(|| {
            self.domain
                .grid(SUP_SAMPLES_PER_AXIS)
                .filter_map(|q| self.grad_exp_h(&q).ok())
                .map(|g| dot(&g, &g).sqrt())
                .fold(0.0, f64::max)
        })
    }

    /// Empirical Hölder constant of `h` on `region` for exponent `alpha`:
    /// the largest of the first-order Taylor remainder quotient and the
    /// normal-gradient quotient over pairs of a 9-per-axis sample grid.
    /// Distances are `|x| + |y|` with `x` the first coordinate and `y` the rest.
    /// Diagnostic only.
    pub fn estimate_holder(&self, region: &Aabb, alpha: f64) -> Result<f64> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::invalid(
                "alpha",
                "Hölder exponent must lie in (0, 1]",
            ));
        }
        let samples: Vec<(Vec<f64>, f64, Vec<f64>)> = region
            .grid(9)
            .map(|q| {
                let (h, g) = self.metric_exponent(&q)?;
                Ok((q, h, g))
            })
            .collect::<Result<_>>()?;
        let mut best = 0.0f64;
        for (i, (p, hp, gp)) in samples.iter().enumerate() {
            for (q, hq, gq) in samples.iter().skip(i + 1) {
                let d: Vec<f64> = q.iter().zip(p).map(|(a, b)| a - b).collect();
                let dist = d[0].abs() + d[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
                if dist == 0.0 {
                    continue;
                }
                // both orientations of the Taylor expansion
                let taylor_pq = (hq - hp - dot(gp, &d)).abs();
                let taylor_qp = (hp - hq + dot(gq, &d)).abs();
                let taylor = taylor_pq.max(taylor_qp) / dist.powf(1.0 + alpha);
                let normal = gq[1..]
                    .iter()
                    .zip(&gp[1..])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
                    / dist.powf(alpha);
                best = best.max(taylor).max(normal);
            }
        }
        Ok(best)
    }
}

/// `N = 3 (4 + 5 s)`.
pub fn curvature_constant(sup_gradient: f64) -> f64 {
    3.0 * (4.0 + 5.0 * sup_gradient)
}

/// `ℓ₀ = 1 / (4 N √(n - 1))`, the largest admissible half-separation.
pub fn max_separation_ell0(n_bound: f64, dim: usize) -> f64 {
    1.0 / (4.0 * n_bound * ((dim - 1) as f64).sqrt())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn central_gradient(m: &MetricField, q: &[f64], step: f64) -> Vec<f64> {
        (0..q.len())
            .map(|i| {
                let mut plus = q.to_vec();
                let mut minus = q.to_vec();
                plus[i] += step;
                minus[i] -= step;
                let hp = m.metric_exponent(&plus).unwrap().0;
                let hm = m.metric_exponent(&minus).unwrap().0;
                (hp - hm) / (2.0 * step)
            })
            .collect()
    }

    #[test]
    fn direct_linear_exponent() {
        let m =
            MetricField::direct(Linear::exponent(0.9, &[0.0, 1.0]), Aabb::cube(2, 5.0)).unwrap();
        let (h, g) = m.metric_exponent(&[0.3, 0.0]).unwrap();
        assert_eq!(h, 0.0);
        assert_eq!(g, vec![0.0, -0.9]);
    }

    #[test]
    fn free_particle_at_half_energy_is_flat() {
        let m = MetricField::from_potential(Zero { dim: 3 }, 0.5, Aabb::cube(3, 1.0)).unwrap();
        for q in [[0.1, 0.2, 0.3], [-1.0, 1.0, 0.0]] {
            let (h, g) = m.metric_exponent(&q).unwrap();
            assert_eq!(h, 0.0);
            assert!(g.iter().all(|v| *v == 0.0));
            assert_eq!(m.exp_h(&q).unwrap(), 1.0);
        }
    }

    #[test]
    fn harmonic_exponent_matches_symbolic_and_finite_differences() {
        let m = MetricField::from_potential(
            Harmonic {
                stiffness: 1.0,
                center: vec![0.0, 0.0],
            },
            1.0,
            Aabb::cube(2, 1.2),
        )
        .unwrap();
        let (h, g) = m.metric_exponent(&[1.0, 0.0]).unwrap();
        assert!(h.abs() < 1e-15);
        assert!((g[0] + 1.0).abs() < 1e-15 && g[1].abs() < 1e-15);
        let fd = central_gradient(&m, &[1.0, 0.0], 1e-6);
        assert!((fd[0] + 1.0).abs() < 1e-6 && fd[1].abs() < 1e-6);
    }

    #[test]
    fn degenerate_and_out_of_box_points_are_rejected() {
        let m = MetricField::from_potential(
            Harmonic {
                stiffness: 1.0,
                center: vec![0.0, 0.0],
            },
            0.5,
            Aabb::cube(2, 3.0),
        )
        .unwrap();
        // E - V = 0 on the unit circle
        assert!(matches!(
            m.exp_h(&[1.0, 0.0]),
            Err(Error::DomainViolation { .. })
        ));
        assert!(matches!(
            m.exp_h(&[2.0, 0.0]),
            Err(Error::DomainViolation { .. })
        ));
        assert!(matches!(
            m.exp_h(&[0.0, 4.0]),
            Err(Error::DomainViolation { .. })
        ));
        assert!(m.exp_h(&[0.5, 0.0]).is_ok());
    }

    #[test]
    fn exp_2h_equals_twice_kinetic_energy() {
        let wells = GaussianWells {
            dim: 2,
            wells: vec![
                GaussianWell {
                    center: vec![-0.5, 0.0],
                    depth: 1.0,
                    width: 0.4,
                },
                GaussianWell {
                    center: vec![0.6, 0.2],
                    depth: 0.7,
                    width: 0.3,
                },
            ],
        };
        let m = MetricField::from_potential(wells.clone(), 0.3, Aabb::cube(2, 2.0)).unwrap();
        for q in Aabb::cube(2, 2.0).grid(11) {
            let eh = m.exp_h(&q).unwrap();
            let expected = 2.0 * (0.3 - wells.value(&q));
            assert!((eh * eh - expected).abs() <= 1e-14 * expected.abs().max(1.0));
            let (h, _) = m.metric_exponent(&q).unwrap();
            assert!(((2.0 * h).exp() - expected).abs() <= 1e-13 * expected);
        }
    }

    #[test]
    fn flat_bound_is_twelve() {
        let m = MetricField::flat(Aabb::cube(2, 1.0));
        let b = m.curvature_bound(&Aabb::cube(2, 1.0)).unwrap();
        assert_eq!(b.n, 12.0);
        assert_eq!(max_separation_ell0(b.n, 2), 1.0 / 48.0);
    }

    #[test]
    fn unit_slope_exponent_gives_27() {
        // h = -y on y in [0, 1]: |∇h| = 1, sup e^{-y} = 1 at y = 0
        let m =
            MetricField::direct(Linear::exponent(1.0, &[0.0, 1.0]), Aabb::cube(2, 2.0)).unwrap();
        let region = Aabb::new(vec![-1.0, 0.0], vec![1.0, 1.0]).unwrap();
        let b = m.curvature_bound(&region).unwrap();
        assert!((b.n - 27.0).abs() < 1e-12);
        assert!((b.sup_grad_h - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ell0_arithmetic() {
        assert!((max_separation_ell0(12.0, 2) - 0.020833333333333332).abs() < 1e-17);
        assert_eq!(max_separation_ell0(12.0, 5), 1.0 / 96.0);
        assert!(max_separation_ell0(13.0, 2) < max_separation_ell0(12.0, 2));
        assert!(max_separation_ell0(12.0, 3) < max_separation_ell0(12.0, 2));
    }

    #[test]
    fn holder_of_linear_exponent_vanishes() {
        let m =
            MetricField::direct(Linear::exponent(0.7, &[0.0, 1.0]), Aabb::cube(2, 1.0)).unwrap();
        let h = m.estimate_holder(&Aabb::cube(2, 0.5), 0.5).unwrap();
        assert!(h < 1e-12, "{h}");
    }

    #[test]
    fn grid_counts_and_bounds() {
        let b = Aabb::new(vec![0.0, -1.0, 2.0], vec![1.0, 1.0, 2.0]).unwrap();
        let pts: Vec<_> = b.grid(5).collect();
        assert_eq!(pts.len(), 125);
        assert!(pts.iter().all(|p| b.contains(p)));
        assert_eq!(pts[0], vec![0.0, -1.0, 2.0]);
    }
}
