//! Sparse regularization of linear inverse problems with variable-exponent
//! penalties `∑_k |x_k|^{p_k}`.
//!
//! The crate covers the full pipeline at desk scale:
//!
//! - [`exponents`]: exponent sequences `{p_k}` and the analytic decision
//!   procedure for when the variable-exponent space collapses to `ℓ¹`;
//! - [`penalty`]: the penalty functional, its metric, gradient, Bregman
//!   distance, and the weighted norm appearing in error bounds;
//! - [`prox`]: high-precision scalar and vector proximal operators for
//!   exponents across `(0, 2]`, via a few safeguarded Newton iterations;
//! - [`operators`]: dense/diagonal/identity forward maps with adjoints and
//!   a power-iteration norm estimate;
//! - [`solver`]: forward-backward and accelerated iteration in the convex
//!   (`p_k > 1`) and nonconvex (`p_k <= 1`) regimes, with optimality
//!   diagnostics and a sparsity audit;
//! - [`experiments`]: seeded noise sweeps that measure reconstruction
//!   error against the theoretical convergence-rate bounds;
//! - [`io`]: JSON and CSV wire formats for every external surface.
//!
//! Core numerics are generic over the scalar type via [`scalar::Real`]
//! (`f32` or `f64`); the `*F64` aliases at the crate root fix the common
//! double-precision instantiation.

pub mod error;
pub mod exponents;
pub mod experiments;
pub mod io;
mod linalg;
pub mod operators;
pub mod penalty;
pub mod prox;
pub mod scalar;
pub mod solver;

pub use error::{Error, Result};
pub use exponents::{ExponentFamily, ExponentSequence, SpaceClassification, SpaceVerdict};
pub use experiments::{
    construct_source_element, emit_report, exhaustive_support_minimum, run_convex_rate_sweep,
    run_nonconvex_rate_sweep, AlphaRule, OracleSolution, RateConfig, RateRecord, ReportFormat,
    TrueSolutionSpec,
};
pub use operators::{DataVector, DenseMatrix, LinearOperator};
pub use penalty::{
    bregman_distance, fmetric, fnorm, penalty_gradient, weighted_l2_norm, CoefficientVector,
    PenaltySpec,
};
pub use prox::{prox_scalar, prox_vector, ProxBranch, ProxResult};
pub use scalar::Real;
pub use solver::{
    optimality_residual, solve, sparsity_audit, sparsity_lower_bound, CoordinateAudit,
    SolveConfig, SolveReport, SolverSettings, SparsityAudit, StepRule,
};

/// Double-precision aliases for the main toolkit types.
pub type ExponentSequenceF64 = ExponentSequence<f64>;
pub type CoefficientVectorF64 = CoefficientVector<f64>;
pub type PenaltySpecF64 = PenaltySpec<f64>;
pub type LinearOperatorF64 = LinearOperator<f64>;
pub type SolveConfigF64 = SolveConfig<f64>;
pub type SolveReportF64 = SolveReport<f64>;
pub type RateConfigF64 = RateConfig<f64>;
pub type RateRecordF64 = RateRecord<f64>;
