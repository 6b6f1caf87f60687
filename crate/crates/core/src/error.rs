use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point {point:?} is outside the metric domain: {reason}")]
    DomainViolation { point: Vec<f64>, reason: String },

    #[error("endpoints coincide (|q_a - q_b| = {separation:e})")]
    DegenerateEndpoints { separation: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("triplet abscissae are not equidistant ({left:e} vs {right:e})")]
    GridMismatch { left: f64, right: f64 },

    #[error("endpoints are not admissible: {0}")]
    NotAdmissible(String),

    #[error("Birkhoff map exhausted its budget of {steps} steps")]
    StepBudgetExceeded {
        steps: u64,
        partial: Box<crate::birkhoff::MapResult>,
    },

    #[error("time recovery requires a metric built from a potential and an energy")]
    NotAPotentialMetric,

    #[error("analytic geodesic undefined: {0}")]
    OutOfDomain(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("lattice coordinate overflow while refining")]
    LatticeOverflow,

    #[error("malformed polygon data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
