//! Error type shared across the toolkit.

use thiserror::Error;

/// Errors reported by construction, evaluation, and solver routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A constructor argument is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Two vectors (or an operator and a vector) disagree on dimension.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// An operation was called with exponents outside its regime.
    #[error("exponent regime violation: {0}")]
    ExponentRegime(String),

    /// A coordinatewise operation failed at one coordinate (1-based index).
    #[error("coordinate {index}: {source}")]
    AtCoordinate {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    /// An iterative routine hit its iteration cap before reaching tolerance.
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    /// Fixed-step rule is undefined when the operator norm estimate is zero.
    #[error("operator norm is zero; fixed safe step size undefined")]
    ZeroOperatorNorm,

    /// The objective became NaN or infinite during iteration.
    #[error("non-finite objective at iteration {iteration}")]
    NonFiniteObjective { iteration: usize },

    /// Least-squares system left a residual above tolerance.
    #[error("rank-deficient system: relative residual {residual:e} above {tolerance:e}")]
    RankDeficient { residual: f64, tolerance: f64 },

    /// A dense linear solve met a vanishing pivot.
    #[error("singular linear system")]
    SingularSystem,

    /// Report emission was asked to serialize an empty record list.
    #[error("empty record list")]
    EmptyRecords,

    /// Exponents dip below the coercivity floor without a bound constraint.
    #[error("min exponent {min_p} below floor {floor}; set a bound constraint")]
    BoundConstraintRequired { min_p: f64, floor: f64 },

    /// Underlying I/O failure while reading or writing files.
    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// Malformed textual input (CSV or JSON).
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
