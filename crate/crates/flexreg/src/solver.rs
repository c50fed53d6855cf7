//! Forward-backward (ISTA) and accelerated (FISTA-style) minimization of
//! `||Ax - y||^2 / 2 + alpha ∑ |x_k|^{p_k}` for exponents in `(0, 2]`.
//!
//! With every exponent above one the problem is strictly convex: the
//! minimizer is unique and iteration stops once the first-order optimality
//! residual drops below tolerance. With some exponent at or below one the
//! problem is nonconvex; termination falls back to a relative
//! objective-decrease window and the result is a stationary point, not a
//! certified global minimum.
//!
//! Iteration order is fixed and no data-dependent reordering happens, so a
//! run is bit-reproducible given its configuration and seed.

use crate::error::{Error, Result};
use crate::linalg;
use crate::operators::{DataVector, LinearOperator};
use crate::penalty::{check_dims, fnorm_slice, CoefficientVector, PenaltySpec};
use crate::prox::prox_vector_bounded;
use crate::scalar::{pow_abs, sign, Real};

/// Step-size policy for the forward step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepRule {
    /// Fixed `gamma = 0.99 / ||A||^2` from the seeded norm estimate.
    FixedSafe,
    /// Start at `gamma = 1`, halve until the quadratic majorization holds
    /// (with a 1e-4 tightening so accepted steps strictly decrease).
    Backtracking,
}

/// Backtracking constants: shrink factor and sufficient-decrease margin.
const BACKTRACK_SHRINK: f64 = 0.5;
const BACKTRACK_DECREASE: f64 = 1e-4;

/// Exponents below this floor lose coercivity; solving then requires an
/// explicit bound constraint `|x_k| <= C`.
pub const COERCIVITY_FLOOR: f64 = 0.05;

/// Entries above this magnitude count as support.
pub const SUPPORT_THRESHOLD: f64 = 1e-10;

/// Consecutive small-decrease iterations required to stop in the
/// nonconvex regime.
const DECREASE_WINDOW: usize = 10;

/// Full problem description consumed by [`solve`].
#[derive(Debug, Clone)]
pub struct SolveConfig<T> {
    pub penalty: PenaltySpec<T>,
    pub operator: LinearOperator<T>,
    pub data: DataVector<T>,
    pub max_iters: usize,
    pub objective_tol: T,
    pub step_rule: StepRule,
    pub acceleration: bool,
    pub restart_on_increase: bool,
    /// Projects iterates onto `[-C, C]` inside the prox step; mandatory
    /// when some exponent is below [`COERCIVITY_FLOOR`].
    pub bound_constraint: Option<T>,
    /// Starting point; zero (the sparsity-friendly default) when absent.
    pub init: Option<CoefficientVector<T>>,
    /// Seed for the power-iteration start vector of the step-size rule.
    pub seed: u64,
}

impl<T: Real> SolveConfig<T> {
    pub fn new(penalty: PenaltySpec<T>, operator: LinearOperator<T>, data: DataVector<T>) -> Self {
        Self {
            penalty,
            operator,
            data,
            max_iters: 50_000,
            objective_tol: T::cast(1e-10),
            step_rule: StepRule::FixedSafe,
            acceleration: false,
            restart_on_increase: true,
            bound_constraint: None,
            init: None,
            seed: 0,
        }
    }

    fn validate(&self) -> Result<(usize, usize)> {
        let n = self.operator.domain_dim();
        let m = self.operator.range_dim();
        check_dims(m, self.data.dim())?;
        if let Some(x0) = &self.init {
            check_dims(n, x0.dim())?;
        }
        if self.max_iters < 1 {
            return Err(Error::InvalidParameter("max_iters must be >= 1".into()));
        }
        if !self.objective_tol.is_finite() || self.objective_tol <= T::zero() {
            return Err(Error::InvalidParameter(
                "objective_tol must be positive".into(),
            ));
        }
        if let Some(c) = self.bound_constraint {
            if !c.is_finite() || c <= T::zero() {
                return Err(Error::InvalidParameter(
                    "bound constraint must be positive and finite".into(),
                ));
            }
        }
        let (lo, hi) = self.penalty.exponents().range_on(n);
        if lo <= T::zero() || hi > T::cast(2.0) {
            return Err(Error::ExponentRegime(format!(
                "solve needs exponents in (0, 2], found range [{lo}, {hi}]"
            )));
        }
        if lo < T::cast(COERCIVITY_FLOOR) && self.bound_constraint.is_none() {
            return Err(Error::BoundConstraintRequired {
                min_p: lo.to_f64().unwrap_or(f64::NAN),
                floor: COERCIVITY_FLOOR,
            });
        }
        Ok((n, m))
    }

    /// True when every evaluated exponent exceeds one (unique minimizer).
    pub fn is_convex_regime(&self) -> bool {
        let n = self.operator.domain_dim();
        self.penalty.exponents().range_on(n).0 > T::one()
    }
}

/// Solver knobs without the problem data; reusable across instances.
#[derive(Debug, Clone)]
pub struct SolverSettings<T> {
    pub max_iters: usize,
    pub objective_tol: T,
    pub step_rule: StepRule,
    pub acceleration: bool,
    pub restart_on_increase: bool,
    pub bound_constraint: Option<T>,
    pub seed: u64,
}

impl<T: Real> Default for SolverSettings<T> {
    fn default() -> Self {
        Self {
            max_iters: 200_000,
            objective_tol: T::cast(1e-9),
            step_rule: StepRule::FixedSafe,
            acceleration: true,
            restart_on_increase: true,
            bound_constraint: None,
            seed: 0,
        }
    }
}

impl<T: Real> SolverSettings<T> {
    /// Attaches these settings to a concrete problem.
    pub fn into_config(
        &self,
        penalty: PenaltySpec<T>,
        operator: LinearOperator<T>,
        data: DataVector<T>,
    ) -> SolveConfig<T> {
        SolveConfig {
            penalty,
            operator,
            data,
            max_iters: self.max_iters,
            objective_tol: self.objective_tol,
            step_rule: self.step_rule,
            acceleration: self.acceleration,
            restart_on_increase: self.restart_on_increase,
            bound_constraint: self.bound_constraint,
            init: None,
            seed: self.seed,
        }
    }
}

/// Outcome of a solve: minimizer, objective history, and diagnostics.
#[derive(Debug, Clone)]
pub struct SolveReport<T> {
    pub minimizer: CoefficientVector<T>,
    pub objective_trace: Vec<T>,
    /// First-order optimality residual; reported in the convex regime
    /// only, where it certifies the unique minimizer.
    pub optimality_residual: Option<T>,
    /// 1-based indices with `|x_k|` above [`SUPPORT_THRESHOLD`].
    pub support: Vec<usize>,
    pub iterations_used: usize,
    pub converged: bool,
}

/// Runs forward-backward iteration
/// `x_{n+1} = prox(x_n - gamma A*(A x_n - y), gamma alpha)` until the
/// regime's termination test fires or the iteration budget runs out.
pub fn solve<T: Real>(config: &SolveConfig<T>) -> Result<SolveReport<T>> {
    let (n, _m) = config.validate()?;
    let exps = config.penalty.exponents();
    let alpha = config.penalty.alpha();
    let convex = config.is_convex_regime();
    let op = &config.operator;
    let data = config.data.as_slice();
    let bound = config.bound_constraint;

    let mut gamma = match config.step_rule {
        StepRule::FixedSafe => {
            let nsq = op.operator_norm_sq(config.seed);
            if nsq == T::zero() {
                return Err(Error::ZeroOperatorNorm);
            }
            T::cast(0.99) / nsq
        }
        StepRule::Backtracking => T::one(),
    };

    let data_fit = |xs: &[T]| -> T {
        let r = op.apply_slice(xs);
        let mut s = T::zero();
        for (ri, &yi) in r.iter().zip(data) {
            let d = *ri - yi;
            s += d * d;
        }
        s / T::cast(2.0)
    };
    let objective = |xs: &[T]| -> T { data_fit(xs) + alpha * fnorm_slice(xs, exps) };

    let mut x: Vec<T> = match &config.init {
        Some(x0) => x0.as_slice().to_vec(),
        None => vec![T::zero(); n],
    };
    let mut f_x = objective(&x);
    if !f_x.is_finite() {
        return Err(Error::NonFiniteObjective { iteration: 0 });
    }
    let mut trace = Vec::with_capacity(config.max_iters.min(1 << 20) + 1);
    trace.push(f_x);

    let mut y = x.clone();
    let mut t_mom = T::one();
    let mut small_decrease_streak = 0usize;
    let mut converged = false;
    let mut final_residual = T::nan();
    let mut iterations_used = 0usize;

    for iter in 1..=config.max_iters {
        iterations_used = iter;
        let (mut candidate, mut used_gamma) =
            forward_backward_step(op, data, &y, gamma, alpha, exps, bound, config.step_rule, &data_fit)?;
        let mut f_new = objective(&candidate);
        if !f_new.is_finite() {
            return Err(Error::NonFiniteObjective { iteration: iter });
        }

        if config.acceleration && config.restart_on_increase && f_new > f_x {
            // Momentum overshot: redo the step from x without
            // extrapolation; the plain step cannot increase the objective.
            t_mom = T::one();
            let (cand2, g2) = forward_backward_step(
                op, data, &x, gamma, alpha, exps, bound, config.step_rule, &data_fit,
            )?;
            candidate = cand2;
            used_gamma = g2;
            f_new = objective(&candidate);
            if !f_new.is_finite() {
                return Err(Error::NonFiniteObjective { iteration: iter });
            }
        }
        gamma = used_gamma;

        if config.acceleration {
            let t_next = (T::one()
                + (T::one() + T::cast(4.0) * t_mom * t_mom).sqrt())
                / T::cast(2.0);
            let beta = (t_mom - T::one()) / t_next;
            y = candidate
                .iter()
                .zip(&x)
                .map(|(&c, &old)| c + beta * (c - old))
                .collect();
            t_mom = t_next;
        } else {
            y = candidate.clone();
        }

        let f_prev = f_x;
        x = candidate;
        f_x = f_new;
        trace.push(f_new);

        if convex {
            let r = residual_slice(op, data, &x, alpha, exps);
            if r <= config.objective_tol {
                final_residual = r;
                converged = true;
                break;
            }
        } else {
            let rel = (f_prev - f_new).abs() / f_prev.abs().max(T::one());
            if rel <= config.objective_tol {
                small_decrease_streak += 1;
                if small_decrease_streak >= DECREASE_WINDOW {
                    converged = true;
                    break;
                }
            } else {
                small_decrease_streak = 0;
            }
        }
    }

    if !convex {
        // The relative-decrease window certifies coordinates only to about
        // sqrt(machine) precision because the objective flattens
        // quadratically. A Newton polish of the smooth restricted
        // stationarity system on the detected support sharpens the point
        // to machine precision; it is rejected unless it keeps the
        // support, keeps every sign, and does not increase the objective.
        if let Some(polished) = polish_nonconvex_support(op, data, &x, alpha, exps, bound) {
            let f_polished = objective(&polished);
            if f_polished.is_finite() && f_polished <= f_x + T::epsilon() * f_x.abs().max(T::one())
            {
                x = polished;
                trace.push(f_polished);
            }
        }
    }

    let minimizer = CoefficientVector::new(x).map_err(|_| Error::NonFiniteObjective {
        iteration: iterations_used,
    })?;
    let optimality_residual = if convex {
        Some(if final_residual.is_nan() {
            residual_slice(op, data, minimizer.as_slice(), alpha, exps)
        } else {
            final_residual
        })
    } else {
        None
    };
    let support = minimizer.support(T::cast(SUPPORT_THRESHOLD));
    Ok(SolveReport {
        minimizer,
        objective_trace: trace,
        optimality_residual,
        support,
        iterations_used,
        converged,
    })
}

/// One prox-gradient step from `base`, backtracking on the step size when
/// that rule is active. Returns the new point and the accepted gamma.
#[allow(clippy::too_many_arguments)]
fn forward_backward_step<T: Real>(
    op: &LinearOperator<T>,
    data: &[T],
    base: &[T],
    mut gamma: T,
    alpha: T,
    exps: &crate::exponents::ExponentSequence<T>,
    bound: Option<T>,
    rule: StepRule,
    data_fit: &impl Fn(&[T]) -> T,
) -> Result<(Vec<T>, T)> {
    let residual = {
        let mut r = op.apply_slice(base);
        for (ri, &yi) in r.iter_mut().zip(data) {
            *ri -= yi;
        }
        r
    };
    let grad = op.apply_adjoint_slice(&residual);
    let f_base = data_fit(base);

    for _ in 0..120 {
        let shifted: Vec<T> = base
            .iter()
            .zip(&grad)
            .map(|(&b, &g)| b - gamma * g)
            .collect();
        let cand = prox_vector_bounded(
            &CoefficientVector::from_raw(shifted),
            gamma * alpha,
            exps,
            bound,
        )?
        .into_vec();
        match rule {
            StepRule::FixedSafe => return Ok((cand, gamma)),
            StepRule::Backtracking => {
                let diff: Vec<T> = cand.iter().zip(base).map(|(&c, &b)| c - b).collect();
                let quad = linalg::dot(&diff, &diff)
                    * (T::one() - T::cast(BACKTRACK_DECREASE))
                    / (T::cast(2.0) * gamma);
                let linear = linalg::dot(&grad, &diff);
                // Rounding slack: near a fixed point both sides agree to
                // machine precision and the raw test would shrink gamma
                // forever.
                let slack = T::epsilon() * T::cast(8.0) * f_base.abs().max(T::one());
                if data_fit(&cand) <= f_base + linear + quad + slack {
                    return Ok((cand, gamma));
                }
                gamma *= T::cast(BACKTRACK_SHRINK);
            }
        }
    }
    Err(Error::NoConvergence {
        iterations: 120,
        residual: gamma.to_f64().unwrap_or(f64::NAN),
    })
}

/// Newton iteration on the stationarity system of the support of `x`:
/// `[A*(Ax - y)]_i + alpha p_i sign(x_i) |x_i|^{p_i - 1} = 0` for the
/// nonzero coordinates, zeros held fixed. Returns the refined full vector,
/// or `None` when the polish is not applicable (empty support, active
/// bound, sign change, or a singular Newton system).
fn polish_nonconvex_support<T: Real>(
    op: &LinearOperator<T>,
    data: &[T],
    x: &[T],
    alpha: T,
    exps: &crate::exponents::ExponentSequence<T>,
    bound: Option<T>,
) -> Option<Vec<T>> {
    let threshold = T::cast(SUPPORT_THRESHOLD);
    let support: Vec<usize> = x
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > threshold)
        .map(|(i, _)| i)
        .collect();
    let s = support.len();
    if s == 0 {
        return None;
    }
    if let Some(c) = bound {
        // Clamped coordinates are boundary, not interior, stationary
        // points; leave them to the prox iteration.
        if support
            .iter()
            .any(|&i| x[i].abs() >= c - T::cast(1e-12) * c.max(T::one()))
        {
            return None;
        }
    }

    let n = x.len();
    let mut columns = Vec::with_capacity(s);
    let mut e = vec![T::zero(); n];
    for &i in &support {
        e[i] = T::one();
        columns.push(op.apply_slice(&e));
        e[i] = T::zero();
    }

    let mut z: Vec<T> = support.iter().map(|&i| x[i]).collect();
    let signs: Vec<T> = z.iter().map(|&v| sign(v)).collect();
    let one = T::one();
    let tol = T::epsilon() * T::cast(64.0)
        * (one + data.iter().map(|v| v.abs()).fold(T::zero(), T::max));

    for _ in 0..40 {
        // Residual of the full map at the current support values.
        let mut ax_minus_y: Vec<T> = data.iter().map(|&v| -v).collect();
        for (col, &zi) in columns.iter().zip(&z) {
            for (r, &c) in ax_minus_y.iter_mut().zip(col) {
                *r += c * zi;
            }
        }
        let mut f = vec![T::zero(); s];
        let mut worst = T::zero();
        for (a, (&i, col)) in support.iter().zip(&columns).enumerate() {
            let p = exps.eval(i + 1);
            let g = crate::linalg::dot(col, &ax_minus_y);
            f[a] = g + alpha * p * signs[a] * pow_abs(z[a], p - one);
            worst = worst.max(f[a].abs());
        }
        if worst <= tol {
            break;
        }
        // Jacobian: A_S^T A_S + diag(alpha p (p-1) |z|^{p-2}).
        let mut jac = vec![T::zero(); s * s];
        for a in 0..s {
            for b in 0..s {
                jac[a * s + b] = crate::linalg::dot(&columns[a], &columns[b]);
            }
            let i = support[a];
            let p = exps.eval(i + 1);
            jac[a * s + a] += alpha * p * (p - one) * pow_abs(z[a], p - T::cast(2.0));
        }
        let rhs: Vec<T> = f.iter().map(|&v| -v).collect();
        let step = match crate::linalg::solve_lu(s, jac, rhs) {
            Ok(d) => d,
            Err(_) => return None,
        };
        for (za, da) in z.iter_mut().zip(&step) {
            *za += *da;
        }
        // A sign flip means the iterate left the smooth region.
        for (za, sa) in z.iter().zip(&signs) {
            if sign(*za) != *sa {
                return None;
            }
        }
    }

    let mut out = x.to_vec();
    for (a, &i) in support.iter().enumerate() {
        out[i] = z[a];
    }
    Some(out)
}

fn residual_slice<T: Real>(
    op: &LinearOperator<T>,
    data: &[T],
    x: &[T],
    alpha: T,
    exps: &crate::exponents::ExponentSequence<T>,
) -> T {
    let mut r = op.apply_slice(x);
    for (ri, &yi) in r.iter_mut().zip(data) {
        *ri -= yi;
    }
    let g = op.apply_adjoint_slice(&r);
    let mut worst = T::zero();
    for (i, (&gi, &xi)) in g.iter().zip(x).enumerate() {
        let q = exps.eval(i + 1);
        let term = (gi + alpha * q * sign(xi) * pow_abs(xi, q - T::one())).abs();
        worst = worst.max(term);
    }
    worst
}

/// Max-norm residual of the optimality condition
/// `[-A*(Ax - y)]_k = alpha q_k sign(x_k) |x_k|^{q_k-1}`; zero exactly at
/// the unique minimizer. Defined for the convex regime (`q_k > 1`) only.
pub fn optimality_residual<T: Real>(
    x: &CoefficientVector<T>,
    config: &SolveConfig<T>,
) -> Result<T> {
    let n = config.operator.domain_dim();
    check_dims(n, x.dim())?;
    check_dims(config.operator.range_dim(), config.data.dim())?;
    let exps = config.penalty.exponents();
    let (lo, _) = exps.range_on(n);
    if lo <= T::one() {
        return Err(Error::ExponentRegime(format!(
            "optimality_residual needs q_k > 1, found min {lo}"
        )));
    }
    Ok(residual_slice(
        &config.operator,
        config.data.as_slice(),
        x.as_slice(),
        config.penalty.alpha(),
        exps,
    ))
}

/// Lower bound `(alpha p / c)^{1/(1-p)}` on the magnitude of a nonzero
/// minimizer coordinate with exponent `p < 1`, where `c` caps the
/// correlation `|[A*(Ax - y)]_k|`.
pub fn sparsity_lower_bound<T: Real>(alpha: T, p: T, c: T) -> T {
    if c == T::zero() {
        return T::infinity();
    }
    (alpha * p / c).powf((T::one() - p).recip())
}

/// Per-coordinate facts behind the sparsity guarantee.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateAudit<T> {
    /// 1-based coordinate index.
    pub index: usize,
    pub value: T,
    /// `(alpha p_i / C)^{1/(1-p_i)}`.
    pub lower_bound: T,
    /// `|x_i|` minus the lower bound; nonnegative at stationary points.
    pub margin: T,
    /// `|alpha p_i |x_i|^{p_i - 1} - |[A*(Ax-y)]_i||`; zero at interior
    /// stationary points.
    pub stationarity_residual: T,
    /// `epsilon_i = p_i^{1/(1-p_i)}`, the magnitude below which the
    /// penalty slope alone exceeds one.
    pub epsilon_threshold: T,
}

/// Result of auditing a sublinear-regime minimizer for the guaranteed
/// sparse structure.
#[derive(Debug, Clone, PartialEq)]
pub struct SparsityAudit<T> {
    pub support_size: usize,
    /// `C = max_i |[A*(Ax - y)]_i|` at the minimizer.
    pub gradient_bound_c: T,
    pub coordinates: Vec<CoordinateAudit<T>>,
}

/// Checks every nonzero coordinate of a sublinear-regime minimizer against
/// the interior-stationarity lower bound `|x_i| >= (alpha p_i / C)^{1/(1-p_i)}`.
pub fn sparsity_audit<T: Real>(
    report: &SolveReport<T>,
    config: &SolveConfig<T>,
) -> Result<SparsityAudit<T>> {
    let n = config.operator.domain_dim();
    check_dims(n, report.minimizer.dim())?;
    let exps = config.penalty.exponents();
    let (lo, hi) = exps.range_on(n);
    if lo <= T::zero() || hi >= T::one() {
        return Err(Error::ExponentRegime(format!(
            "sparsity_audit needs exponents in (0, 1), found range [{lo}, {hi}]"
        )));
    }
    let alpha = config.penalty.alpha();
    let x = report.minimizer.as_slice();
    let mut r = config.operator.apply_slice(x);
    for (ri, &yi) in r.iter_mut().zip(config.data.as_slice()) {
        *ri -= yi;
    }
    let g = config.operator.apply_adjoint_slice(&r);
    let c = g.iter().map(|v| v.abs()).fold(T::zero(), T::max);

    let support = report.minimizer.support(T::cast(SUPPORT_THRESHOLD));
    let coordinates = support
        .iter()
        .map(|&k| {
            let i = k - 1;
            let p = exps.eval(k);
            let lower_bound = sparsity_lower_bound(alpha, p, c);
            let value = x[i];
            CoordinateAudit {
                index: k,
                value,
                lower_bound,
                margin: value.abs() - lower_bound,
                stationarity_residual: (alpha * p * pow_abs(value, p - T::one())
                    - g[i].abs())
                .abs(),
                epsilon_threshold: p.powf((T::one() - p).recip()),
            }
        })
        .collect();
    Ok(SparsityAudit {
        support_size: support.len(),
        gradient_bound_c: c,
        coordinates,
    })
}
