//! Graph-like polygons on the `(ε, ζ)` grid between two endpoints.
//!
//! A polygon is stored in the local frame of its endpoints: abscissae
//! `X_j = j ε` for `j = -M..=M` and normal offsets `Y_j ∈ ζ ℤ^{n-1}`, kept as
//! integer lattice coordinates so that refinement never accumulates drift.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{dot, MetricField};

/// Orthonormal frame with `q_b - q_a = 2ℓ e₁` and origin at the midpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalFrame {
    origin: Vec<f64>,
    /// Column-major `n × n` orthonormal matrix.
    basis: Vec<f64>,
    ell: f64,
}

impl LocalFrame {
    /// Frame of the chord `q_a → q_b`. The normal directions are completed by
    /// the Householder reflection that maps `e₁` to the unit chord.
    pub fn new(q_a: &[f64], q_b: &[f64]) -> Result<Self> {
        if q_a.len() != q_b.len() {
            return Err(Error::DimensionMismatch {
                expected: q_a.len(),
                got: q_b.len(),
            });
        }
        let n = q_a.len();
        if n < 2 {
            return Err(Error::invalid(
                "dim",
                "the configuration space needs n >= 2",
            ));
        }
        let chord: Vec<f64> = q_b.iter().zip(q_a).map(|(b, a)| b - a).collect();
        let length = dot(&chord, &chord).sqrt();
        if !(length >= 1e-12) {
            return Err(Error::DegenerateEndpoints { separation: length });
        }
        let u: Vec<f64> = chord.iter().map(|c| c / length).collect();

        // H = I - 2 v vᵀ / vᵀv with v = e₁ - u, so H e₁ = u.
        let mut v = u.iter().map(|x| -x).collect::<Vec<_>>();
        v[0] += 1.0;
        let vv = dot(&v, &v);
        let mut basis = vec![0.0; n * n];
        for col in 0..n {
            for row in 0..n {
                let identity = if row == col { 1.0 } else { 0.0 };
                basis[col * n + row] = if vv < 1e-30 {
                    identity
                } else {
                    identity - 2.0 * v[row] * v[col] / vv
                };
            }
        }
        // pin the first column to the exact chord direction
        basis[..n].copy_from_slice(&u);

        Ok(LocalFrame {
            origin: q_a.iter().zip(q_b).map(|(a, b)| 0.5 * (a + b)).collect(),
            basis,
            ell: 0.5 * length,
        })
    }

    /// A frame with explicitly supplied orthonormal columns.
    pub fn from_parts(origin: Vec<f64>, basis: Vec<f64>, ell: f64) -> Result<Self> {
        let n = origin.len();
        if basis.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: basis.len(),
            });
        }
        if !(ell > 0.0) {
            return Err(Error::DegenerateEndpoints {
                separation: 2.0 * ell,
            });
        }
        let frame = LocalFrame { origin, basis, ell };
        if frame.orthonormality_defect() > 1e-10 {
            return Err(Error::invalid("basis", "columns are not orthonormal"));
        }
        Ok(frame)
    }

    pub fn dim(&self) -> usize {
        self.origin.len()
    }

    /// Half the endpoint separation.
    pub fn ell(&self) -> f64 {
        self.ell
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    /// Column `k` of the basis; column 0 is the chord direction.
    pub fn axis(&self, k: usize) -> &[f64] {
        let n = self.dim();
        &self.basis[k * n..(k + 1) * n]
    }

    pub fn basis(&self) -> &[f64] {
        &self.basis
    }

    /// `max |BᵀB - I|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot(self.axis(i), self.axis(j)) - target).abs());
            }
        }
        worst
    }

    pub fn to_world(&self, x: f64, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.to_world_into(x, y, &mut out);
        out
    }

    pub fn to_world_into(&self, x: f64, y: &[f64], out: &mut [f64]) {
        let n = self.dim();
        out.copy_from_slice(&self.origin);
        for (row, o) in out.iter_mut().enumerate() {
            *o += x * self.basis[row];
            for (k, yk) in y.iter().enumerate() {
                *o += yk * self.basis[(k + 1) * n + row];
            }
        }
    }

    pub fn to_local(&self, q: &[f64]) -> LocalPoint {
        let d: Vec<f64> = q.iter().zip(&self.origin).map(|(a, o)| a - o).collect();
        LocalPoint {
            x: dot(self.axis(0), &d),
            y: (1..self.dim()).map(|k| dot(self.axis(k), &d)).collect(),
        }
    }

    /// World coordinates of the two endpoints.
    pub fn endpoints(&self) -> (Vec<f64>, Vec<f64>) {
        let zero = vec![0.0; self.dim() - 1];
        (
            self.to_world(-self.ell, &zero),
            self.to_world(self.ell, &zero),
        )
    }

    /// The same chord traversed backwards: `e₁ ↦ -e₁`, normals unchanged.
    pub fn reversed(&self) -> LocalFrame {
        let mut basis = self.basis.clone();
        for b in &mut basis[..self.dim()] {
            *b = -*b;
        }
        LocalFrame {
            origin: self.origin.clone(),
            basis,
            ell: self.ell,
        }
    }
}

/// A point `(X, Y)` in local coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalPoint {
    pub x: f64,
    pub y: Vec<f64>,
}

impl LocalPoint {
    pub fn new(x: f64, y: Vec<f64>) -> Self {
        LocalPoint { x, y }
    }
}

/// Normal grid spacing `ζ = base / 6^six_power`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpacing {
    pub base: f64,
    pub six_power: u32,
}

impl GridSpacing {
    pub fn new(base: f64) -> Result<Self> {
        if !(base > 0.0 && base.is_finite()) {
            return Err(Error::invalid("zeta", "grid spacing must be positive"));
        }
        Ok(GridSpacing { base, six_power: 0 })
    }

    pub fn value(&self) -> f64 {
        self.base / 6f64.powi(self.six_power as i32)
    }

    /// The next refinement level, `ζ / 6`.
    pub fn refined(&self) -> GridSpacing {
        GridSpacing {
            base: self.base,
            six_power: self.six_power + 1,
        }
    }
}

/// Polygon with `2M + 1` vertices on the `(ε, ζ)` grid of a frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    frame: LocalFrame,
    m: usize,
    zeta: GridSpacing,
    /// Row-major `(2M + 1) × (n - 1)` lattice coordinates of `Y_j / ζ`.
    lattice: Vec<i64>,
}

impl Polygon {
    /// The ε-discretisation of the straight segment, `Y_j = 0`.
    pub fn straight(frame: LocalFrame, m: usize, zeta: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("M", "need at least one cell on each side"));
        }
        let normals = frame.dim() - 1;
        Ok(Polygon {
            frame,
            m,
            zeta: GridSpacing::new(zeta)?,
            lattice: vec![0; (2 * m + 1) * normals],
        })
    }

    pub fn from_lattice(
        frame: LocalFrame,
        m: usize,
        zeta: GridSpacing,
        lattice: Vec<i64>,
    ) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("M", "need at least one cell on each side"));
        }
        let normals = frame.dim() - 1;
        if lattice.len() != (2 * m + 1) * normals {
            return Err(Error::DimensionMismatch {
                expected: (2 * m + 1) * normals,
                got: lattice.len(),
            });
        }
        if !(zeta.base > 0.0 && zeta.base.is_finite()) {
            return Err(Error::invalid("zeta", "grid spacing must be positive"));
        }
        let p = Polygon {
            frame,
            m,
            zeta,
            lattice,
        };
        if p.offset(0).iter().chain(p.offset(2 * m)).any(|&k| k != 0) {
            return Err(Error::invalid("Y", "endpoints must have zero offset"));
        }
        Ok(p)
    }

    pub fn frame(&self) -> &LocalFrame {
        &self.frame
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn vertex_count(&self) -> usize {
        2 * self.m + 1
    }

    /// Number of normal directions, `n - 1`.
    pub fn normals(&self) -> usize {
        self.frame.dim() - 1
    }

    pub fn eps(&self) -> f64 {
        self.frame.ell / self.m as f64
    }

    pub fn zeta(&self) -> f64 {
        self.zeta.value()
    }

    pub fn spacing(&self) -> GridSpacing {
        self.zeta
    }

    pub fn lattice(&self) -> &[i64] {
        &self.lattice
    }

    /// Lattice coordinates of vertex `i` (`i = j + M`).
    pub fn offset(&self, i: usize) -> &[i64] {
        let k = self.normals();
        &self.lattice[i * k..(i + 1) * k]
    }

    pub(crate) fn offset_mut(&mut self, i: usize) -> &mut [i64] {
        let k = self.normals();
        &mut self.lattice[i * k..(i + 1) * k]
    }

    /// `X` of vertex `i`; exact `±ℓ` at the ends.
    pub fn x(&self, i: usize) -> f64 {
        self.frame.ell * (i as f64 - self.m as f64) / self.m as f64
    }

    /// `Y` of vertex `i`.
    pub fn y(&self, i: usize) -> Vec<f64> {
        let z = self.zeta();
        self.offset(i).iter().map(|&k| k as f64 * z).collect()
    }

    pub fn local(&self, i: usize) -> LocalPoint {
        LocalPoint {
            x: self.x(i),
            y: self.y(i),
        }
    }

    pub fn world(&self, i: usize) -> Vec<f64> {
        self.frame.to_world(self.x(i), &self.y(i))
    }

    pub fn world_points(&self) -> Vec<Vec<f64>> {
        (0..self.vertex_count()).map(|i| self.world(i)).collect()
    }

    /// The same curve with the vertex order reversed.
    pub fn reversed(&self) -> Polygon {
        let k = self.normals();
        let mut lattice = Vec::with_capacity(self.lattice.len());
        for i in (0..self.vertex_count()).rev() {
            lattice.extend_from_slice(&self.lattice[i * k..(i + 1) * k]);
        }
        Polygon {
            frame: self.frame.reversed(),
            m: self.m,
            zeta: self.zeta,
            lattice,
        }
    }

    /// Replace the lattice spacing, keeping lattice coordinates. Used by
    /// refinement after rescaling the integers.
    pub(crate) fn with_lattice(&self, m: usize, zeta: GridSpacing, lattice: Vec<i64>) -> Polygon {
        Polygon {
            frame: self.frame.clone(),
            m,
            zeta,
            lattice,
        }
    }

    /// Largest `|e_i · (Y_{j-1} + Y_{j+1} - 2Y_j)| / ζ` over interior `j`.
    pub fn max_second_lattice(&self) -> i64 {
        let k = self.normals();
        let mut worst = 0i64;
        for i in 1..2 * self.m {
            for c in 0..k {
                let d = self.lattice[(i - 1) * k + c] + self.lattice[(i + 1) * k + c]
                    - 2 * self.lattice[i * k + c];
                worst = worst.max(d.abs());
            }
        }
        worst
    }
}

/// Two-point trapezoidal length of a segment, `(e^{h(p)} + e^{h(q)})/2 · |p - q|`.
pub fn segment_length(
    metric: &MetricField,
    frame: &LocalFrame,
    p: &LocalPoint,
    q: &LocalPoint,
) -> Result<f64> {
    let ep = metric.exp_h(&frame.to_world(p.x, &p.y))?;
    let eq = metric.exp_h(&frame.to_world(q.x, &q.y))?;
    let dx = q.x - p.x;
    let dy2: f64 = p.y.iter().zip(&q.y).map(|(a, b)| (b - a) * (b - a)).sum();
    Ok(0.5 * (ep + eq) * (dx * dx + dy2).sqrt())
}

/// Segment length from lattice differences; the form used everywhere the
/// polygon's own segments are measured.
pub(crate) fn lattice_segment(
    eh0: f64,
    eh1: f64,
    dx: f64,
    d0: &[i64],
    d1: &[i64],
    zeta: f64,
) -> f64 {
    let mut s = dx * dx;
    for (a, b) in d0.iter().zip(d1) {
        let dy = (b - a) as f64 * zeta;
        s += dy * dy;
    }
    0.5 * (eh0 + eh1) * s.sqrt()
}

/// Conformal factor at every vertex.
pub fn vertex_factors(metric: &MetricField, polygon: &Polygon) -> Result<Vec<f64>> {
    (0..polygon.vertex_count())
        .map(|i| metric.exp_h(&polygon.world(i)))
        .collect()
}

/// Per-segment discrete lengths, left to right.
pub fn segment_lengths(metric: &MetricField, polygon: &Polygon) -> Result<Vec<f64>> {
    let eh = vertex_factors(metric, polygon)?;
    let z = polygon.zeta();
    Ok((0..2 * polygon.m())
        .map(|i| {
            lattice_segment(
                eh[i],
                eh[i + 1],
                polygon.x(i + 1) - polygon.x(i),
                polygon.offset(i),
                polygon.offset(i + 1),
                z,
            )
        })
        .collect())
}

/// Discrete length: the sum of the `2M` segment lengths.
pub fn polygon_length(metric: &MetricField, polygon: &Polygon) -> Result<f64> {
    let mut acc = crate::birkhoff::CompensatedLength::zero();
    for s in segment_lengths(metric, polygon)? {
        acc.add(s);
    }
    Ok(acc.value())
}

/// First and second difference quotients of a polygon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifferenceProfile {
    /// `Δ_j / ε` for `j = -M..M-1`.
    pub first_q: Vec<Vec<f64>>,
    /// `(Δ_j - Δ_{j-1}) / ε²` for interior `j`.
    pub second_q: Vec<Vec<f64>>,
    /// Largest Euclidean norm of a first quotient.
    pub sup_first: f64,
    /// Largest component of a second quotient in absolute value.
    pub sup_second_inf: f64,
}

pub fn difference_profile(polygon: &Polygon) -> DifferenceProfile {
    let k = polygon.normals();
    let (eps, z) = (polygon.eps(), polygon.zeta());
    let lat = polygon.lattice();
    let first_q: Vec<Vec<f64>> = (0..2 * polygon.m())
        .map(|i| {
            (0..k)
                .map(|c| (lat[(i + 1) * k + c] - lat[i * k + c]) as f64 * z / eps)
                .collect()
        })
        .collect();
    let second_q: Vec<Vec<f64>> = (1..2 * polygon.m())
        .map(|i| {
            (0..k)
                .map(|c| {
                    (lat[(i - 1) * k + c] + lat[(i + 1) * k + c] - 2 * lat[i * k + c]) as f64 * z
                        / (eps * eps)
                })
                .collect()
        })
        .collect();
    let sup_first = first_q.iter().map(|v| dot(v, v).sqrt()).fold(0.0, f64::max);
    let sup_second_inf = second_q
        .iter()
        .flat_map(|v| v.iter().map(|x| x.abs()))
        .fold(0.0, f64::max);
    DifferenceProfile {
        first_q,
        second_q,
        sup_first,
        sup_second_inf,
    }
}

/// Membership in `𝒟_B`: every component of every second difference quotient
/// is at most `bound` in absolute value. Decided on the integer lattice.
pub fn in_class(polygon: &Polygon, bound: f64) -> bool {
    let eps = polygon.eps();
    let threshold = bound * eps * eps / polygon.zeta();
    polygon.max_second_lattice() as f64 <= threshold
}

/// Whether every vertex lies in the parabolic region
/// `|Y|_∞ ≤ N (ℓ² - X²)` of the chord.
pub fn in_region_p2n(polygon: &Polygon, n_bound: f64) -> bool {
    let ell = polygon.frame().ell();
    (0..polygon.vertex_count()).all(|i| {
        let x = polygon.x(i);
        let y_max = polygon.y(i).iter().fold(0.0f64, |a, v| a.max(v.abs()));
        y_max <= n_bound * (ell * ell - x * x) + 1e-12
    })
}
