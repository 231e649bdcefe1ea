use thiserror::Error;

/// Errors raised by the geometric and numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("loop is not closed: |x(0) - x(1)| = {gap:e}")]
    OpenLoop { gap: f64 },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("map evaluation failed at probe {index}: {reason}")]
    MapEvaluation { index: usize, reason: String },

    #[error("vector is not a unit vector: |q| = {norm}")]
    NotUnit { norm: f64 },

    #[error("sample {index} is off the Lagrangian (residual {residual:e})")]
    OffLagrangian { index: usize, residual: f64 },

    #[error("grid too coarse to unwrap the phase at sample {index} (step {step})")]
    CoarseGrid { index: usize, step: f64 },

    #[error("loops do not share a base point (generator {index} starts {gap:e} away)")]
    BasePointMismatch { index: usize, gap: f64 },

    #[error("cone map is not constant near the collapsed circles")]
    ConeNotCollapsible,

    #[error("degenerate point set: {0}")]
    DegenerateSet(String),

    #[error("rotation search failed: best distance {best:.4} < margin {margin:.4}")]
    RotationSearchFailed { best: f64, margin: f64 },

    #[error("epsilon {epsilon:e} below resolution {resolution:e}")]
    BelowResolution { epsilon: f64, resolution: f64 },

    #[error("unsupported domain: {0}")]
    UnsupportedDomain(String),

    #[error("embedding construction failed: {0}")]
    Construction(String),

    #[error("Poisson solve failed (residual {residual:e})")]
    PoissonSolve { residual: f64 },

    #[error("Jacobian correction residual {residual:e} above tolerance {tolerance:e}")]
    JacobianResidual { residual: f64, tolerance: f64 },

    #[error("no admissible neighborhood: {0}")]
    NotSqueezable(String),

    #[error("flow blew up at t = {t} (|x| = {norm:e})")]
    FlowBlowUp { t: f64, norm: f64 },

    #[error("displacement not achieved: best overhead {best_overhead:.4} (requested {requested:.4})")]
    DisplacementNotAchieved { best_overhead: f64, requested: f64 },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("format error: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
