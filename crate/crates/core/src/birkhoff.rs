//! Birkhoff curve shortening on a fixed `(ε, ζ)` grid.
//!
//! A step scans interior vertices left to right and, for each, the normal
//! directions `+e₂, -e₂, +e₃, …`; the first move by `ζ` that strictly shortens
//! the two adjacent segments is applied. The map iterates steps until one is
//! void.

use std::cmp::Ordering;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{curvature_constant, max_separation_ell0, Aabb, MetricField};
use crate::polygon::{
    in_class, lattice_segment, segment_length, segment_lengths, vertex_factors, LocalFrame,
    LocalPoint, Polygon,
};

/// Double-double running total. Additions of exact differences keep it
/// strictly monotone where a plain `f64` sum would stall at one ulp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompensatedLength {
    pub hi: f64,
    pub lo: f64,
}

impl CompensatedLength {
    pub fn zero() -> Self {
        CompensatedLength { hi: 0.0, lo: 0.0 }
    }

    pub fn add(&mut self, x: f64) {
        let s = self.hi + x;
        let bb = s - self.hi;
        let err = (self.hi - (s - bb)) + (x - bb) + self.lo;
        self.hi = s + err;
        self.lo = err - (self.hi - s);
    }

    pub fn value(&self) -> f64 {
        self.hi + self.lo
    }
}

impl PartialOrd for CompensatedLength {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi)? {
            Ordering::Equal => self.lo.partial_cmp(&other.lo),
            ord => Some(ord),
        }
    }
}

/// A normal direction `sign · e_{axis+2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Direction {
    /// Index into the normal offset vector, 0 for `e₂`.
    pub axis: usize,
    pub sign: i8,
}

impl Direction {
    /// Position in the fixed sweep order `+e₂, -e₂, +e₃, -e₃, …`.
    pub fn index(&self) -> usize {
        2 * self.axis + usize::from(self.sign < 0)
    }

    pub fn from_index(index: usize) -> Self {
        Direction {
            axis: index / 2,
            sign: if index % 2 == 0 { 1 } else { -1 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StepKind {
    /// Vertex `site` moved by `ζ·direction`; lengths are of the two adjacent
    /// segments before and after.
    Moved {
        site: i64,
        direction: Direction,
        old_length: f64,
        new_length: f64,
    },
    Void,
}

/// Position in the sweep where a step stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepCursor {
    pub site: i64,
    pub direction_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub kind: StepKind,
    pub cursor: SweepCursor,
    /// Trial points that left the metric domain and were skipped.
    pub skipped_trials: u64,
}

impl StepOutcome {
    pub fn is_void(&self) -> bool {
        matches!(self.kind, StepKind::Void)
    }
}

/// One Birkhoff step, evaluated from scratch exactly as defined.
///
/// Useful as a reference; [`birkhoff_map`] produces the same sequence of moves
/// without rescanning unchanged vertices.
pub fn birkhoff_step(metric: &MetricField, polygon: &mut Polygon) -> Result<StepOutcome> {
    let eh = vertex_factors(metric, polygon)?;
    let segs = segment_lengths(metric, polygon)?;
    let normals = polygon.normals();
    let m = polygon.m();
    let zeta = polygon.zeta();
    let mut trial = vec![0i64; normals];
    let mut skipped = 0;
    let mut cursor = SweepCursor {
        site: 1 - m as i64,
        direction_index: 0,
    };
    for i in 1..2 * m {
        let old = segs[i - 1] + segs[i];
        for d in 0..2 * normals {
            let dir = Direction::from_index(d);
            cursor = SweepCursor {
                site: i as i64 - m as i64,
                direction_index: d,
            };
            trial.copy_from_slice(polygon.offset(i));
            trial[dir.axis] = trial[dir.axis]
                .checked_add(dir.sign as i64)
                .ok_or(Error::LatticeOverflow)?;
            let y: Vec<f64> = trial.iter().map(|&k| k as f64 * zeta).collect();
            let Ok(eh_t) = metric.exp_h(&polygon.frame().to_world(polygon.x(i), &y)) else {
                skipped += 1;
                continue;
            };
            let left = lattice_segment(
                eh[i - 1],
                eh_t,
                polygon.x(i) - polygon.x(i - 1),
                polygon.offset(i - 1),
                &trial,
                zeta,
            );
            let right = lattice_segment(
                eh_t,
                eh[i + 1],
                polygon.x(i + 1) - polygon.x(i),
                &trial,
                polygon.offset(i + 1),
                zeta,
            );
            let new = left + right;
            if new < old {
                polygon.offset_mut(i).copy_from_slice(&trial);
                return Ok(StepOutcome {
                    kind: StepKind::Moved {
                        site: cursor.site,
                        direction: dir,
                        old_length: old,
                        new_length: new,
                    },
                    cursor,
                    skipped_trials: skipped,
                });
            }
        }
    }
    Ok(StepOutcome {
        kind: StepKind::Void,
        cursor,
        skipped_trials: skipped,
    })
}

#[derive(Debug, Clone)]
pub struct BirkhoffOptions {
    /// Safety valve on the number of affirmative steps.
    pub max_steps: u64,
    /// Keep one length entry per affirmative step.
    pub record_history: bool,
    /// Full length recompute interval, in steps.
    pub recompute_every: u64,
    /// When set, the final polygon is tested for membership in `𝒟_bound`.
    pub class_bound: Option<f64>,
}

impl Default for BirkhoffOptions {
    fn default() -> Self {
        BirkhoffOptions {
            max_steps: 10_000_000,
            record_history: true,
            recompute_every: 10_000,
            class_bound: None,
        }
    }
}

/// An affirmative step as seen by an observer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepEvent {
    /// 1-based index of the step.
    pub step: u64,
    pub site: i64,
    pub direction: Direction,
    pub old_length: f64,
    pub new_length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BirkhoffReport {
    pub affirmative_steps: u64,
    pub initial_length: f64,
    pub final_length: f64,
    #[serde(skip)]
    pub length_history: Vec<CompensatedLength>,
    pub skipped_trials: u64,
    /// Membership of the final polygon in `𝒟_N`, if a bound was given.
    pub final_in_dn: Option<bool>,
    /// Largest componentwise second difference quotient over every polygon
    /// the map passed through, the initial one included.
    pub peak_second_inf: f64,
    /// Largest relative gap between the running length and a full recompute.
    pub max_recompute_drift: f64,
    /// Largest number of grid moves any single vertex coordinate ended up
    /// away from its start; a lower bound on the number of sweeps.
    pub max_vertex_travel: u64,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl BirkhoffReport {
    /// Whether the recorded lengths decrease strictly.
    pub fn history_strictly_decreasing(&self) -> bool {
        self.length_history.windows(2).all(|w| w[1] < w[0])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapResult {
    pub polygon: Polygon,
    pub report: BirkhoffReport,
}

/// Runs Birkhoff steps until one is void.
pub fn birkhoff_map(
    metric: &MetricField,
    polygon: Polygon,
    options: &BirkhoffOptions,
) -> Result<MapResult> {
    birkhoff_map_observed(metric, polygon, options, &mut |_, _| {})
}

/// As [`birkhoff_map`], calling `observer` after every affirmative step with
/// the updated polygon.
pub fn birkhoff_map_observed(
    metric: &MetricField,
    mut polygon: Polygon,
    options: &BirkhoffOptions,
    observer: &mut dyn FnMut(&Polygon, &StepEvent),
) -> Result<MapResult> {
    if options.max_steps == 0 {
        return Err(Error::invalid("max_steps", "must be at least 1"));
    }
    let started = Instant::now();
    let m = polygon.m();
    let normals = polygon.normals();
    let zeta = polygon.zeta();
    let eps = polygon.eps();
    let xs: Vec<f64> = (0..polygon.vertex_count()).map(|i| polygon.x(i)).collect();
    let mut eh = vertex_factors(metric, &polygon)?;
    let mut segs = segment_lengths(metric, &polygon)?;

    let mut total = CompensatedLength::zero();
    for s in &segs {
        total.add(*s);
    }
    let initial_length = total.value();
    let mut history = Vec::new();
    if options.record_history {
        history.push(total);
    }

    let lattice_to_quotient = zeta / (eps * eps);
    let mut peak_second = polygon.max_second_lattice();
    let mut steps = 0u64;
    let mut skipped = 0u64;
    let mut drift = 0.0f64;
    let mut trial = vec![0i64; normals];
    let mut y = vec![0.0; normals];
    let mut world = vec![0.0; metric.dim()];

    let start_lattice = polygon.lattice().to_vec();
    let travel = |p: &Polygon| -> u64 {
        p.lattice()
            .iter()
            .zip(&start_lattice)
            .map(|(a, b)| a.abs_diff(*b))
            .max()
            .unwrap_or(0)
    };

    let mut i = 1;
    'sweep: while i < 2 * m {
        let old = segs[i - 1] + segs[i];
        for d in 0..2 * normals {
            let dir = Direction::from_index(d);
            trial.copy_from_slice(polygon.offset(i));
            trial[dir.axis] = trial[dir.axis]
                .checked_add(dir.sign as i64)
                .ok_or(Error::LatticeOverflow)?;
            for (yk, &k) in y.iter_mut().zip(&trial) {
                *yk = k as f64 * zeta;
            }
            polygon.frame().to_world_into(xs[i], &y, &mut world);
            let Ok(eh_t) = metric.exp_h(&world) else {
                skipped += 1;
                continue;
            };
            let left = lattice_segment(
                eh[i - 1],
                eh_t,
                xs[i] - xs[i - 1],
                polygon.offset(i - 1),
                &trial,
                zeta,
            );
            let right = lattice_segment(
                eh_t,
                eh[i + 1],
                xs[i + 1] - xs[i],
                &trial,
                polygon.offset(i + 1),
                zeta,
            );
            let new = left + right;
            if new < old {
                if steps == options.max_steps {
                    let report = BirkhoffReport {
                        affirmative_steps: steps,
                        initial_length,
                        final_length: total.value(),
                        length_history: history,
                        skipped_trials: skipped,
                        final_in_dn: None,
                        peak_second_inf: peak_second as f64 * lattice_to_quotient,
                        max_recompute_drift: drift,
                        max_vertex_travel: travel(&polygon),
                        wall_time: started.elapsed(),
                    };
                    return Err(Error::StepBudgetExceeded {
                        steps,
                        partial: Box::new(MapResult { polygon, report }),
                    });
                }
                polygon.offset_mut(i).copy_from_slice(&trial);
                eh[i] = eh_t;
                segs[i - 1] = left;
                segs[i] = right;
                total.add(new - old);
                steps += 1;
                if options.record_history {
                    history.push(total);
                }
                for c in i.saturating_sub(1).max(1)..=(i + 1).min(2 * m - 1) {
                    peak_second = peak_second.max(local_second(&polygon, c));
                }
                if steps % options.recompute_every.max(1) == 0 {
                    let mut fresh = CompensatedLength::zero();
                    for s in segment_lengths(metric, &polygon)? {
                        fresh.add(s);
                    }
                    let gap = (fresh.value() - total.value()).abs()
                        / fresh.value().abs().max(f64::MIN_POSITIVE);
                    drift = drift.max(gap);
                }
                observer(
                    &polygon,
                    &StepEvent {
                        step: steps,
                        site: i as i64 - m as i64,
                        direction: dir,
                        old_length: old,
                        new_length: new,
                    },
                );
                // vertices left of i-1 still have unchanged neighbours
                i = i.saturating_sub(1).max(1);
                continue 'sweep;
            }
        }
        i += 1;
    }

    let final_in_dn = options.class_bound.map(|b| in_class(&polygon, b));
    let report = BirkhoffReport {
        affirmative_steps: steps,
        initial_length,
        final_length: total.value(),
        length_history: history,
        skipped_trials: skipped,
        final_in_dn,
        peak_second_inf: peak_second as f64 * lattice_to_quotient,
        max_recompute_drift: drift,
        max_vertex_travel: travel(&polygon),
        wall_time: started.elapsed(),
    };
    Ok(MapResult { polygon, report })
}

fn local_second(polygon: &Polygon, i: usize) -> i64 {
    let (a, b, c) = (
        polygon.offset(i - 1),
        polygon.offset(i),
        polygon.offset(i + 1),
    );
    (0..b.len())
        .map(|k| (a[k] + c[k] - 2 * b[k]).abs())
        .max()
        .unwrap_or(0)
}

/// Centred difference `ΔL̄(ε, δ)`: the change of the two-segment length when
/// the middle vertex `q` is displaced by `(0, δ)`.
pub fn triplet_delta(
    metric: &MetricField,
    frame: &LocalFrame,
    q_minus: &LocalPoint,
    q: &LocalPoint,
    q_plus: &LocalPoint,
    delta: &[f64],
) -> Result<f64> {
    let left = q.x - q_minus.x;
    let right = q_plus.x - q.x;
    if (left - right).abs() > 1e-12 * left.abs().max(right.abs()).max(1e-300) {
        return Err(Error::GridMismatch { left, right });
    }
    if delta.len() != q.y.len() {
        return Err(Error::DimensionMismatch {
            expected: q.y.len(),
            got: delta.len(),
        });
    }
    let moved = LocalPoint::new(q.x, q.y.iter().zip(delta).map(|(a, b)| a + b).collect());
    let after = segment_length(metric, frame, q_minus, &moved)?
        + segment_length(metric, frame, &moved, q_plus)?;
    let before =
        segment_length(metric, frame, q_minus, q)? + segment_length(metric, frame, q, q_plus)?;
    Ok(after - before)
}

/// Constants gating a pair of endpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityCertificate {
    #[serde(rename = "N")]
    pub n_bound: f64,
    pub sup_grad_h: f64,
    pub sup_grad_exp_h: f64,
    pub ell0: f64,
    pub ell: f64,
    pub region_ok: bool,
    /// Largest admissible initial grid spacing `ε₀`.
    pub eps_max: f64,
    pub region: Aabb,
}

impl AdmissibilityCertificate {
    pub fn admissible(&self) -> bool {
        self.ell <= self.ell0 && self.region_ok
    }
}

/// Default region `P`: the box of half-width `2ℓ` around the midpoint,
/// clipped to the metric domain.
pub fn default_region(metric: &MetricField, q_a: &[f64], q_b: &[f64]) -> Result<Aabb> {
    let frame = LocalFrame::new(q_a, q_b)?;
    let around = Aabb::around(frame.origin(), 2.0 * frame.ell());
    around
        .intersect(metric.domain())
        .ok_or_else(|| Error::OutOfDomain("endpoints lie outside the metric domain".into()))
}

/// Computes `N` over `region`, `ℓ₀`, and whether the parabolic region
/// `|Y|_∞ ≤ N(ℓ² − X²)` of the chord lies inside `region`.
pub fn check_admissible(
    metric: &MetricField,
    q_a: &[f64],
    q_b: &[f64],
    region: &Aabb,
) -> Result<AdmissibilityCertificate> {
    let frame = LocalFrame::new(q_a, q_b)?;
    if region.dim() != metric.dim() || frame.dim() != metric.dim() {
        return Err(Error::DimensionMismatch {
            expected: metric.dim(),
            got: frame.dim(),
        });
    }
    let bound = metric.curvature_bound(region)?;
    let n = bound.n;
    let ell = frame.ell();
    let ell0 = max_separation_ell0(n, metric.dim());

    let normals = metric.dim() - 1;
    let slices = 33;
    let mut region_ok = true;
    'outer: for s in 0..slices {
        let x = -ell + 2.0 * ell * s as f64 / (slices - 1) as f64;
        let w = (n * (ell * ell - x * x)).max(0.0);
        for corner in 0..(1usize << normals) {
            let y: Vec<f64> = (0..normals)
                .map(|k| if corner >> k & 1 == 1 { w } else { -w })
                .collect();
            if !region.contains(&frame.to_world(x, &y)) {
                region_ok = false;
                break 'outer;
            }
        }
    }

    debug_assert_eq!(
        n,
        curvature_constant(bound.sup_grad_h.max(bound.sup_grad_exp_h))
    );
    Ok(AdmissibilityCertificate {
        n_bound: n,
        sup_grad_h: bound.sup_grad_h,
        sup_grad_exp_h: bound.sup_grad_exp_h,
        ell0,
        ell,
        region_ok,
        eps_max: (0.5 / n).min(0.5 * ell),
        region: region.clone(),
    })
}
