use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("space has {points} points, exact enumeration is capped at {limit}")]
    SpaceTooLarge { points: usize, limit: usize },
    #[error("eps must be non-negative, got {0}")]
    NegativeEps(f64),
    #[error("eps must be positive, got {0}")]
    NonPositiveEps(f64),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid metric-measure space: {0}")]
    InvalidSpace(String),
    #[error("invalid probability vector: {0}")]
    InvalidMeasure(String),
    #[error("invalid element for {group}: {detail}")]
    InvalidElement { group: String, detail: String },
    #[error("operation requires a different group kind: {0}")]
    WrongKind(String),
    #[error("carrier mismatch: {0}")]
    CarrierMismatch(String),
    #[error("{points} points exceed the exact enumeration cap of {limit}")]
    TooLargeForExact { points: u128, limit: u128 },
    #[error("declared Lipschitz constant {declared} violated: observed ratio {observed}")]
    LipschitzViolation { declared: f64, observed: f64 },
    #[error("member {index} evaluated to {value}, outside the declared bound {bound}")]
    OutOfRange { index: usize, value: f64, bound: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("common refinement grid {grid} exceeds cap {cap}")]
    GridBlowup { grid: u128, cap: u128 },
    #[error("empty tuple")]
    EmptyTuple,
    #[error("invalid step data: {0}")]
    InvalidStep(String),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Whether the error comes from running a computation on valid input
    /// (size caps, grid blow-up, violated declarations) rather than from
    /// rejecting the input itself.
    pub fn is_computation(&self) -> bool {
        matches!(
            self,
            Error::SpaceTooLarge { .. }
                | Error::TooLargeForExact { .. }
                | Error::GridBlowup { .. }
                | Error::LipschitzViolation { .. }
                | Error::OutOfRange { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
