use thiserror::Error;

/// Errors produced by the calibration estimators and their supporting routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty input")]
    Empty,
    #[error("coordinate {index} is negative ({value})")]
    NegativeCoordinate { index: usize, value: f64 },
    #[error("coordinates sum to {sum}, not within {tol} of 1")]
    SumOutOfTolerance { sum: f64, tol: f64 },
    #[error("coordinate {index} is not finite")]
    NonFinite { index: usize },
    #[error("temperature must be positive and finite, got {0}")]
    NonPositiveTemperature(f64),
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("label {label} out of range for {classes} classes")]
    IndexOutOfRange { label: usize, classes: usize },
    #[error("value {0} lies on or outside the boundary of the open unit interval")]
    BoundaryInput(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("bandwidth must be positive and finite, got {0}")]
    InvalidBandwidth(f64),
    #[error("invalid bandwidth grid: {0}")]
    InvalidGrid(String),
    #[error("operation requires a binary dataset, got {0} classes")]
    NotBinary(usize),
    #[error("gradient is only available for p in {{1, 2}}, got p = {0}")]
    UnsupportedNorm(f64),
    #[error("denominator statistic {0:e} is too close to zero")]
    DegenerateDenominator(f64),
    #[error("kernel weights underflowed for every included point")]
    EmptySum,
    #[error("study grid needs at least two distinct sample sizes")]
    InsufficientGrid,
    #[error("errors must be strictly positive for a log-log fit, got {0}")]
    NonPositiveError(f64),
    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("confidence level must lie in (0, 1), got {0}")]
    InvalidLevel(f64),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
