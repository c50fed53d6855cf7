//! Wire formats: JSON schemas for problems, reports, and rate sweeps,
//! plus the CSV loaders for vectors and dense matrices.
//!
//! All floating-point values cross the wire as `f64`; conversion into a
//! generic scalar type happens at the boundary.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::experiments::{AlphaRule, RateConfig, RateRecord, TrueSolutionSpec};
use crate::exponents::{ExponentFamily, ExponentSequence, SpaceClassification};
use crate::operators::{DenseMatrix, LinearOperator};
use crate::penalty::{CoefficientVector, PenaltySpec};
use crate::prox::ProxResult;
use crate::scalar::Real;
use crate::solver::{SolveConfig, SolveReport, SolverSettings, StepRule};

/// Round-trippable decimal rendering (17 significant digits).
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

// ---------------------------------------------------------------------------
// Exponent families: {"family": string, "params": {...}, "offset": int}
// ---------------------------------------------------------------------------

/// Family names used on the wire.
pub const FAMILY_CONSTANT: &str = "constant";
pub const FAMILY_ONE_PLUS_INV_K: &str = "one_plus_inv_k";
pub const FAMILY_ONE_PLUS_INV_LOG_K: &str = "one_plus_inv_log_k";
pub const FAMILY_ONE_PLUS_INV_LOG_K_ALPHA: &str = "one_plus_inv_log_k_alpha";
pub const FAMILY_ONE_PLUS_GEOMETRIC: &str = "one_plus_geometric";
pub const FAMILY_TABULATED: &str = "tabulated";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExponentsJson {
    pub family: String,
    #[serde(default)]
    pub params: Map<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<usize>,
}

fn param_f64(params: &Map<String, Value>, key: &str) -> Result<f64> {
    params
        .get(key)
        .and_then(Value::as_f64)
        .ok_or_else(|| Error::Parse(format!("missing or non-numeric param '{key}'")))
}

fn param_f64_list(params: &Map<String, Value>, key: &str) -> Result<Vec<f64>> {
    let arr = params
        .get(key)
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Parse(format!("missing or non-array param '{key}'")))?;
    arr.iter()
        .map(|v| {
            v.as_f64()
                .ok_or_else(|| Error::Parse(format!("non-numeric entry in '{key}'")))
        })
        .collect()
}

impl ExponentsJson {
    pub fn to_sequence<T: Real>(&self) -> Result<ExponentSequence<T>> {
        let seq: ExponentSequence<T> = match self.family.as_str() {
            FAMILY_CONSTANT => {
                ExponentSequence::constant(T::cast(param_f64(&self.params, "p")?))?
            }
            FAMILY_ONE_PLUS_INV_K => ExponentSequence::one_plus_inv_k(),
            FAMILY_ONE_PLUS_INV_LOG_K => ExponentSequence::one_plus_inv_log_k(),
            FAMILY_ONE_PLUS_INV_LOG_K_ALPHA => ExponentSequence::one_plus_inv_log_k_alpha(
                T::cast(param_f64(&self.params, "alpha")?),
            )?,
            FAMILY_ONE_PLUS_GEOMETRIC => ExponentSequence::one_plus_geometric(
                T::cast(param_f64(&self.params, "c")?),
                T::cast(param_f64(&self.params, "r")?),
            )?,
            FAMILY_TABULATED => ExponentSequence::tabulated(
                param_f64_list(&self.params, "values")?
                    .into_iter()
                    .map(T::cast)
                    .collect(),
                T::cast(param_f64(&self.params, "tail")?),
            )?,
            other => return Err(Error::Parse(format!("unknown exponent family '{other}'"))),
        };
        match self.offset {
            Some(o) => seq.with_offset(o),
            None => Ok(seq),
        }
    }

    pub fn from_sequence<T: Real>(seq: &ExponentSequence<T>) -> Self {
        let mut params = Map::new();
        let family = match seq.family() {
            ExponentFamily::Constant(p) => {
                params.insert("p".into(), json_f64(*p));
                FAMILY_CONSTANT
            }
            ExponentFamily::OnePlusInvK => FAMILY_ONE_PLUS_INV_K,
            ExponentFamily::OnePlusInvLogK => FAMILY_ONE_PLUS_INV_LOG_K,
            ExponentFamily::OnePlusInvLogKAlpha(a) => {
                params.insert("alpha".into(), json_f64(*a));
                FAMILY_ONE_PLUS_INV_LOG_K_ALPHA
            }
            ExponentFamily::OnePlusGeometric(c, r) => {
                params.insert("c".into(), json_f64(*c));
                params.insert("r".into(), json_f64(*r));
                FAMILY_ONE_PLUS_GEOMETRIC
            }
            ExponentFamily::Tabulated(values, tail) => {
                params.insert(
                    "values".into(),
                    Value::Array(values.iter().map(|v| json_f64(*v)).collect()),
                );
                params.insert("tail".into(), json_f64(*tail));
                FAMILY_TABULATED
            }
        };
        Self {
            family: family.into(),
            params,
            offset: Some(seq.offset()),
        }
    }
}

fn json_f64<T: Real>(v: T) -> Value {
    Value::from(v.to_f64().unwrap_or(f64::NAN))
}

// ---------------------------------------------------------------------------
// Operators
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OperatorJson {
    Dense {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        matrix: Option<Vec<Vec<f64>>>,
        /// Path to a CSV file (one row per line) used when `matrix` is
        /// absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        csv: Option<String>,
    },
    Diagonal {
        entries: Vec<f64>,
    },
    Identity {
        dim: usize,
    },
}

impl OperatorJson {
    pub fn to_operator<T: Real>(&self) -> Result<LinearOperator<T>> {
        match self {
            OperatorJson::Dense { matrix, csv } => {
                let rows: Vec<Vec<f64>> = match (matrix, csv) {
                    (Some(m), _) => m.clone(),
                    (None, Some(path)) => {
                        let text = std::fs::read_to_string(path)?;
                        parse_dense_csv(&text)?
                    }
                    (None, None) => {
                        return Err(Error::Parse(
                            "dense operator needs 'matrix' or 'csv'".into(),
                        ))
                    }
                };
                let rows = rows
                    .into_iter()
                    .map(|r| r.into_iter().map(T::cast).collect())
                    .collect();
                LinearOperator::dense_from_rows(rows)
            }
            OperatorJson::Diagonal { entries } => {
                LinearOperator::diagonal(entries.iter().copied().map(T::cast).collect())
            }
            OperatorJson::Identity { dim } => LinearOperator::identity(*dim),
        }
    }

    pub fn from_operator<T: Real>(op: &LinearOperator<T>) -> Self {
        match op {
            LinearOperator::DenseMatrix(m) => OperatorJson::Dense {
                matrix: Some(
                    m.to_rows()
                        .into_iter()
                        .map(|r| r.into_iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect())
                        .collect(),
                ),
                csv: None,
            },
            LinearOperator::Diagonal(d) => OperatorJson::Diagonal {
                entries: d.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect(),
            },
            LinearOperator::Identity(n) => OperatorJson::Identity { dim: *n },
        }
    }
}

/// Parses a dense matrix from CSV text, one comma-separated row per line.
pub fn parse_dense_csv(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row: Result<Vec<f64>> = line
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
            })
            .collect();
        rows.push(row?);
    }
    if rows.is_empty() {
        return Err(Error::Parse("empty matrix CSV".into()));
    }
    Ok(rows)
}

/// Loads a dense matrix from a CSV file.
pub fn dense_matrix_from_csv_file(path: &str) -> Result<DenseMatrix<f64>> {
    let text = std::fs::read_to_string(path)?;
    DenseMatrix::from_rows(parse_dense_csv(&text)?)
}

// ---------------------------------------------------------------------------
// Coefficient vectors: flat JSON arrays, or single-column CSV
// ---------------------------------------------------------------------------

/// Parses a coefficient vector from single-column CSV text.
pub fn parse_vector_csv(text: &str) -> Result<CoefficientVector<f64>> {
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        values.push(
            line.parse::<f64>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?,
        );
    }
    CoefficientVector::new(values)
}

/// Renders a coefficient vector as single-column CSV.
pub fn vector_to_csv<T: Real>(x: &CoefficientVector<T>) -> String {
    let mut out = String::new();
    for v in x.as_slice() {
        out.push_str(&format_f64(v.to_f64().unwrap_or(f64::NAN)));
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------------
// Solver problem and report
// ---------------------------------------------------------------------------

fn default_max_iters() -> usize {
    200_000
}
fn default_objective_tol() -> f64 {
    1e-9
}
fn default_step_rule() -> String {
    "fixed_safe".into()
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverJson {
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_objective_tol")]
    pub objective_tol: f64,
    #[serde(default = "default_step_rule")]
    pub step_rule: String,
    #[serde(default = "default_true")]
    pub acceleration: bool,
    #[serde(default = "default_true")]
    pub restart_on_increase: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound_constraint: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

impl Default for SolverJson {
    fn default() -> Self {
        Self {
            max_iters: default_max_iters(),
            objective_tol: default_objective_tol(),
            step_rule: default_step_rule(),
            acceleration: true,
            restart_on_increase: true,
            bound_constraint: None,
            seed: 0,
        }
    }
}

impl SolverJson {
    pub fn to_settings<T: Real>(&self) -> Result<SolverSettings<T>> {
        let step_rule = match self.step_rule.as_str() {
            "fixed_safe" => StepRule::FixedSafe,
            "backtracking" => StepRule::Backtracking,
            other => return Err(Error::Parse(format!("unknown step_rule '{other}'"))),
        };
        Ok(SolverSettings {
            max_iters: self.max_iters,
            objective_tol: T::cast(self.objective_tol),
            step_rule,
            acceleration: self.acceleration,
            restart_on_increase: self.restart_on_increase,
            bound_constraint: self.bound_constraint.map(T::cast),
            seed: self.seed,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemJson {
    pub operator: OperatorJson,
    pub data: Vec<f64>,
    pub exponents: ExponentsJson,
    pub alpha: f64,
    #[serde(default)]
    pub solver: SolverJson,
}

impl ProblemJson {
    pub fn to_config<T: Real>(&self) -> Result<SolveConfig<T>> {
        let operator = self.operator.to_operator()?;
        let exponents = self.exponents.to_sequence()?;
        let penalty = PenaltySpec::new(exponents, T::cast(self.alpha))?;
        let data =
            CoefficientVector::new(self.data.iter().copied().map(T::cast).collect())?;
        let settings: SolverSettings<T> = self.solver.to_settings()?;
        Ok(settings.into_config(penalty, operator, data))
    }
}

/// JSON mirror of a solve report. The support indices are 1-based.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ReportJson {
    pub minimizer: Vec<f64>,
    pub objective_trace: Vec<f64>,
    pub optimality_residual: Option<f64>,
    pub support: Vec<usize>,
    pub iterations_used: usize,
    pub converged: bool,
}

impl ReportJson {
    pub fn from_report<T: Real>(report: &SolveReport<T>) -> Self {
        Self {
            minimizer: report
                .minimizer
                .as_slice()
                .iter()
                .map(|v| v.to_f64().unwrap_or(f64::NAN))
                .collect(),
            objective_trace: report
                .objective_trace
                .iter()
                .map(|v| v.to_f64().unwrap_or(f64::NAN))
                .collect(),
            optimality_residual: report
                .optimality_residual
                .map(|v| v.to_f64().unwrap_or(f64::NAN)),
            support: report.support.clone(),
            iterations_used: report.iterations_used,
            converged: report.converged,
        }
    }
}

// ---------------------------------------------------------------------------
// Prox and classification outputs
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ProxJson {
    pub minimizer: f64,
    pub objective_value: f64,
    pub branch: String,
    pub newton_iterations: u32,
}

impl ProxJson {
    pub fn from_result<T: Real>(r: &ProxResult<T>) -> Self {
        Self {
            minimizer: r.minimizer.to_f64().unwrap_or(f64::NAN),
            objective_value: r.objective_value.to_f64().unwrap_or(f64::NAN),
            branch: r.branch.as_str().into(),
            newton_iterations: r.newton_iterations,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ClassificationJson {
    pub verdict: String,
    #[serde(rename = "witness_N")]
    pub witness_n: Option<u32>,
}

impl ClassificationJson {
    pub fn from_classification<T: Real>(c: &SpaceClassification<T>) -> Self {
        Self {
            verdict: format!("{:?}", c.verdict),
            witness_n: c.witness_n,
        }
    }
}

// ---------------------------------------------------------------------------
// Rate sweeps
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrueSolutionJson {
    Explicit(Vec<f64>),
    SparseRandom { support_size: usize },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaRuleJson {
    ProportionalToDelta(f64),
    ProportionalToDeltaSq(f64),
    Explicit(Vec<f64>),
}

fn default_trials() -> usize {
    3
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatesJson {
    pub operator: OperatorJson,
    pub true_solution: TrueSolutionJson,
    pub exponents: ExponentsJson,
    pub delta_grid: Vec<f64>,
    pub alpha_rule: AlphaRuleJson,
    #[serde(default)]
    pub noise_seed: u64,
    #[serde(default = "default_trials")]
    pub trials_per_delta: usize,
    #[serde(default)]
    pub solver: SolverJson,
}

impl RatesJson {
    pub fn to_config<T: Real>(&self) -> Result<RateConfig<T>> {
        let true_solution = match &self.true_solution {
            TrueSolutionJson::Explicit(v) => TrueSolutionSpec::Explicit(
                CoefficientVector::new(v.iter().copied().map(T::cast).collect())?,
            ),
            TrueSolutionJson::SparseRandom { support_size } => TrueSolutionSpec::SparseRandom {
                support_size: *support_size,
            },
        };
        let alpha_rule = match &self.alpha_rule {
            AlphaRuleJson::ProportionalToDelta(c) => AlphaRule::ProportionalToDelta(T::cast(*c)),
            AlphaRuleJson::ProportionalToDeltaSq(c) => {
                AlphaRule::ProportionalToDeltaSq(T::cast(*c))
            }
            AlphaRuleJson::Explicit(list) => {
                AlphaRule::Explicit(list.iter().copied().map(T::cast).collect())
            }
        };
        Ok(RateConfig {
            operator: self.operator.to_operator()?,
            true_solution,
            exponents: self.exponents.to_sequence()?,
            delta_grid: self.delta_grid.iter().copied().map(T::cast).collect(),
            alpha_rule,
            noise_seed: self.noise_seed,
            trials_per_delta: self.trials_per_delta,
            solver: self.solver.to_settings()?,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RateRecordJson {
    pub delta: f64,
    pub alpha: f64,
    pub measured_error: f64,
    pub bound_rhs: f64,
    pub satisfied: bool,
    pub support_recovered: bool,
    pub penalty_value: f64,
    pub penalty_value_true: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_fit: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_certified: Option<bool>,
}

impl RateRecordJson {
    pub fn from_record<T: Real>(r: &RateRecord<T>) -> Self {
        let f = |v: T| v.to_f64().unwrap_or(f64::NAN);
        Self {
            delta: f(r.delta),
            alpha: f(r.alpha),
            measured_error: f(r.measured_error),
            bound_rhs: f(r.bound_rhs),
            satisfied: r.satisfied,
            support_recovered: r.support_recovered,
            penalty_value: f(r.penalty_value),
            penalty_value_true: f(r.penalty_value_true),
            c_fit: r.c_fit.map(f),
            oracle_certified: r.oracle_certified,
        }
    }

    pub fn to_record(&self) -> RateRecord<f64> {
        RateRecord {
            delta: self.delta,
            alpha: self.alpha,
            measured_error: self.measured_error,
            bound_rhs: self.bound_rhs,
            satisfied: self.satisfied,
            support_recovered: self.support_recovered,
            penalty_value: self.penalty_value,
            penalty_value_true: self.penalty_value_true,
            c_fit: self.c_fit,
            oracle_certified: self.oracle_certified,
        }
    }
}
