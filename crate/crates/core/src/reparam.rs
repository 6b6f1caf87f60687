//! Physical time along a geodesic of the Jacobi metric.
//!
//! Along a solution `|q̇| = √(2(E − V))`, so `dt = |dq| / √(2(E − V))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{dot, MetricField, ScalarField};
use crate::polygon::Polygon;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub q: Vec<f64>,
    pub qdot: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicsDiagnostics {
    /// `max |½|q̇|² + V(q) − E|` over samples.
    pub max_energy_drift: f64,
    /// `max |q̈ + ∇V(q)|` over interior samples, `q̈` by divided differences.
    pub max_newton_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
    #[serde(rename = "T0")]
    pub t0: f64,
    pub energy: f64,
    pub diagnostics: DynamicsDiagnostics,
}

fn potential_of(metric: &MetricField) -> Result<(&dyn ScalarField, f64)> {
    metric.potential().ok_or(Error::NotAPotentialMetric)
}

/// Times every vertex of `polygon` by the cumulative trapezoid rule for
/// `∫ |dq| / √(2(E − V))`, with velocities from central differences in `t`.
pub fn recover_time(metric: &MetricField, polygon: &Polygon) -> Result<Trajectory> {
    let points = polygon.world_points();
    recover_time_points(metric, &points)
}

/// As [`recover_time`] for an arbitrary vertex sequence in world coordinates.
pub fn recover_time_points(metric: &MetricField, points: &[Vec<f64>]) -> Result<Trajectory> {
    let (potential, energy) = potential_of(metric)?;
    if points.len() < 2 {
        return Err(Error::invalid("polygon", "need at least two vertices"));
    }
    let guard = 1e-10 * energy.abs();
    let mut inv_speed = Vec::with_capacity(points.len());
    for q in points {
        let kinetic = 2.0 * (energy - potential.value(q));
        if !(kinetic >= guard && kinetic > 0.0) {
            return Err(Error::DomainViolation {
                point: q.clone(),
                reason: format!("2(E - V) = {kinetic:e} is too close to the energy boundary"),
            });
        }
        inv_speed.push(1.0 / kinetic.sqrt());
    }

    let mut times = Vec::with_capacity(points.len());
    times.push(0.0);
    for i in 1..points.len() {
        let ds = crate::metric::dist2(&points[i - 1], &points[i]).sqrt();
        let t = times[i - 1] + ds * 0.5 * (inv_speed[i - 1] + inv_speed[i]);
        if !(t > times[i - 1]) {
            return Err(Error::invalid("polygon", "consecutive vertices coincide"));
        }
        times.push(t);
    }

    let last = points.len() - 1;
    let samples: Vec<TrajectorySample> = (0..points.len())
        .map(|i| {
            let (a, b) = match i {
                0 => (0, 1),
                i if i == last => (last - 1, last),
                i => (i - 1, i + 1),
            };
            let dt = times[b] - times[a];
            TrajectorySample {
                t: times[i],
                q: points[i].clone(),
                qdot: points[b]
                    .iter()
                    .zip(&points[a])
                    .map(|(x, y)| (x - y) / dt)
                    .collect(),
            }
        })
        .collect();

    let mut traj = Trajectory {
        t0: times[last],
        samples,
        energy,
        diagnostics: DynamicsDiagnostics {
            max_energy_drift: 0.0,
            max_newton_residual: 0.0,
        },
    };
    if traj.samples.len() >= 3 {
        traj.diagnostics = verify_dynamics(&traj, metric)?;
    }
    Ok(traj)
}

/// Energy drift and Newton residual of a timed trajectory.
pub fn verify_dynamics(traj: &Trajectory, metric: &MetricField) -> Result<DynamicsDiagnostics> {
    let (potential, energy) = potential_of(metric)?;
    let s = &traj.samples;
    if s.len() < 3 {
        return Err(Error::invalid("trajectory", "need at least three samples"));
    }
    let mut drift = 0.0f64;
    for p in s {
        let e = 0.5 * dot(&p.qdot, &p.qdot) + potential.value(&p.q) - energy;
        drift = drift.max(e.abs());
    }
    let n = s[0].q.len();
    let mut grad = vec![0.0; n];
    let mut newton = 0.0f64;
    for i in 1..s.len() - 1 {
        let (h0, h1) = (s[i].t - s[i - 1].t, s[i + 1].t - s[i].t);
        potential.gradient(&s[i].q, &mut grad);
        let mut r2 = 0.0;
        for c in 0..n {
            let fwd = (s[i + 1].q[c] - s[i].q[c]) / h1;
            let back = (s[i].q[c] - s[i - 1].q[c]) / h0;
            let acc = 2.0 * (fwd - back) / (h0 + h1);
            r2 += (acc + grad[c]) * (acc + grad[c]);
        }
        newton = newton.max(r2.sqrt());
    }
    Ok(DynamicsDiagnostics {
        max_energy_drift: drift,
        max_newton_residual: newton,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{Aabb, Linear, Zero};
    use crate::polygon::LocalFrame;

    #[test]
    fn free_particle_time() {
        let m = MetricField::from_potential(Zero { dim: 2 }, 0.5, Aabb::cube(2, 2.0)).unwrap();
        let f = LocalFrame::new(&[-1.0, 0.0], &[1.0, 0.0]).unwrap();
        let p = Polygon::straight(f, 8, 1e-3).unwrap();
        let t = recover_time(&m, &p).unwrap();
        assert!((t.t0 - 2.0).abs() < 1e-14);
        assert_eq!(t.samples.len(), 17);
        assert!(t.samples.windows(2).all(|w| w[1].t > w[0].t));
        assert!(t.diagnostics.max_energy_drift < 1e-10);
        assert!(t.diagnostics.max_newton_residual < 1e-10);

        let fast = MetricField::from_potential(Zero { dim: 2 }, 2.0, Aabb::cube(2, 2.0)).unwrap();
        let t = recover_time(&fast, &p).unwrap();
        assert!((t.t0 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn direct_exponent_has_no_time() {
        let m =
            MetricField::direct(Linear::exponent(0.5, &[0.0, 1.0]), Aabb::cube(2, 2.0)).unwrap();
        let f = LocalFrame::new(&[-1.0, 0.0], &[1.0, 0.0]).unwrap();
        let p = Polygon::straight(f, 2, 1e-3).unwrap();
        assert!(matches!(
            recover_time(&m, &p),
            Err(Error::NotAPotentialMetric)
        ));
    }
}
