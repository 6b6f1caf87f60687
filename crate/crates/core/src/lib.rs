//! Local geodesics of the Jacobi metric by grid-constrained Birkhoff curve
//! shortening, and recovery of the physical trajectory they describe.
//!
//! A boundary-value problem `q̈ = −∇V(q)`, `q(0) = q_a`, `q(T₀) = q_b` at
//! energy `E` is recast as a geodesic problem for `e^{2h} δ` with
//! `e^{2h} = 2(E − V)`. Polygons between the endpoints are shortened one grid
//! move at a time, refined dyadically, and finally re-timed.

pub mod bench;
pub mod birkhoff;
pub mod config;
pub mod error;
pub mod io;
pub mod metric;
pub mod polygon;
pub mod refine;
pub mod reparam;

pub use birkhoff::{
    birkhoff_map, birkhoff_map_observed, birkhoff_step, check_admissible, default_region,
    triplet_delta, AdmissibilityCertificate, BirkhoffOptions, BirkhoffReport, CompensatedLength,
    Direction, MapResult, StepEvent, StepKind, StepOutcome,
};
pub use config::{MetricConfig, PotentialConfig};
pub use error::{Error, Result};
pub use metric::{
    curvature_constant, max_separation_ell0, Aabb, CurvatureBound, FnField, GaussianWell,
    GaussianWells, Harmonic, Linear, MetricField, PotentialSpec, ScalarField, Zero,
};
pub use polygon::{
    difference_profile, in_class, in_region_p2n, polygon_length, segment_length, DifferenceProfile,
    GridSpacing, LocalFrame, LocalPoint, Polygon,
};
pub use refine::{
    embed_midpoints, holder_alpha, l2_delta, run_refinement, run_refinement_observed,
    weak_residual, Interpolants, LevelStats, RefineOptions, RefinementRun, RefinementSchedule,
};
pub use reparam::{
    recover_time, recover_time_points, verify_dynamics, DynamicsDiagnostics, Trajectory,
    TrajectorySample,
};
