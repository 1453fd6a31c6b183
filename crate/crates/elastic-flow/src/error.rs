use thiserror::Error;

/// Errors raised by the curve, variation, flow and shooting routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("curve needs at least {min} segments, got {got}")]
    TooFewNodes { got: usize, min: usize },
    #[error("segment {index} has zero length")]
    ZeroSegment { index: usize },
    #[error("node {index} is not finite")]
    NonFiniteNode { index: usize },
    #[error("constrained endpoint {end} is off the axis (y = {y})")]
    OffAxis { end: usize, y: f64 },
    #[error("field has {got} entries, curve has {expected} nodes")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("penalty mu must be positive, got {0}")]
    NonPositiveMu(f64),
    #[error("field moves a constrained endpoint off the axis (X2 = {value} at end {end})")]
    ConstraintViolation { end: usize, value: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("shooting state became non-finite at step {step}")]
    NonFinite { step: usize },
    #[error("flow step {step} raised the energy from {before} to {after}")]
    EnergyIncrease { step: usize, before: f64, after: f64 },
    #[error("flow step {step} moved a node by {moved:e}, above the limit {limit:e}")]
    StepTooLarge { step: usize, moved: f64, limit: f64 },
    #[error("initial curve is not admissible: {0}")]
    NotAdmissible(String),
    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("Jacobian is singular")]
    SingularJacobian,
    #[error("linear system is singular at column {0}")]
    SingularMatrix(usize),
    #[error("trace is empty")]
    EmptyTrace,
    #[error("need at least {needed} samples in the fit window, found {found}")]
    InsufficientSamples { needed: usize, found: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
