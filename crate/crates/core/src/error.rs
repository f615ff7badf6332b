//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("expected a {expected} field")]
    KindMismatch { expected: &'static str },

    #[error("ball exceeds the grid ({0}); use the clipped variant to truncate explicitly")]
    BallOutOfBounds(String),

    #[error(
        "spectral resolvability guard: t = {requested} is below the attainable minimum \
         t = {min_t} for this grid (multiplier tail above 1e-12); waive explicitly to proceed"
    )]
    SpectralGuard { requested: f64, min_t: f64 },

    #[error("exponent constraint violated: {0}")]
    ExponentConstraint(String),

    #[error("scaling relation violated: residual {residual}")]
    ScalingRelation { residual: f64 },

    #[error("regime mismatch: expected {expected}, got {got}")]
    RegimeMismatch { expected: String, got: String },

    #[error("unsupported spatial exponent p = {p}: the capacity solver handles p in {{1, 2}}")]
    UnsupportedExponent { p: f64 },

    #[error("cover radius {epsilon} is below the grid resolution {resolution} in the parabolic metric")]
    EpsilonBelowResolution { epsilon: f64, resolution: f64 },

    #[error("regression needs at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },

    #[error("operator materialization budget exceeded: {vars} x {constraints} > {budget}")]
    BudgetExceeded {
        vars: usize,
        constraints: usize,
        budget: usize,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("malformed field file: {0}")]
    MalformedField(String),
}

pub type Result<T> = std::result::Result<T, Error>;
