//! Proximal operators of `t ↦ alpha |t|^p` for `p` in `(0, 2]`.
//!
//! The scalar prox minimizes `(u - t)^2 / 2 + alpha |u|^p` over the real
//! line. `p = 1` and `p = 2` dispatch to closed forms. For `1 < p < 2` the
//! minimizer is the unique root of `u + alpha p u^{p-1} = |t|` on
//! `(0, |t|)`; for `0 < p < 1` the candidates are `0` and the larger
//! stationary root beyond the inflection point, compared by objective
//! value with ties resolving to `0`. Roots are found by a few safeguarded
//! Newton iterations: a bracket is maintained alongside the Newton step,
//! and any step leaving the bracket falls back to bisection. Raw Newton is
//! unsafe here because `g'(u) = 1 + alpha p (p-1) u^{p-2}` is unbounded
//! near zero for `p < 2`.

use crate::error::{Error, Result};
use crate::exponents::ExponentSequence;
use crate::penalty::CoefficientVector;
use crate::scalar::{pow_abs, sign, Real};

/// How the scalar prox arrived at its minimizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProxBranch {
    /// The origin won: either no positive stationary point exists or the
    /// objective comparison selected zero.
    Zero,
    /// Stationary root located by safeguarded Newton.
    Interior,
    /// Closed-form soft threshold (`p = 1`).
    SoftThreshold,
    /// Closed form `t / (1 + 2 alpha)` (`p = 2`).
    ClosedFormQuadratic,
}

impl ProxBranch {
    pub fn as_str(self) -> &'static str {
        match self {
            ProxBranch::Zero => "Zero",
            ProxBranch::Interior => "Interior",
            ProxBranch::SoftThreshold => "SoftThreshold",
            ProxBranch::ClosedFormQuadratic => "ClosedFormQuadratic",
        }
    }
}

/// Scalar prox outcome. The minimizer never flips sign relative to `t` and
/// never exceeds it in magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxResult<T> {
    pub minimizer: T,
    /// Value of `(u - t)^2 / 2 + alpha |u|^p` at the minimizer.
    pub objective_value: T,
    pub newton_iterations: u32,
    pub branch: ProxBranch,
}

/// Iteration cap for the safeguarded Newton loop; exceeding it is an error.
const NEWTON_CAP: u32 = 200;

fn objective<T: Real>(u: T, t: T, alpha: T, p: T) -> T {
    let d = u - t;
    d * d / T::cast(2.0) + alpha * pow_abs(u, p)
}

/// Residual tolerance: 1e-12 absolute, floored by the machine-precision
/// scale of the problem so the loop terminates for every scalar type.
fn residual_tol<T: Real>(t_abs: T) -> T {
    T::cast(1e-12).max(T::epsilon() * T::cast(4.0) * (T::one() + t_abs))
}

fn validate<T: Real>(t: T, alpha: T, p: T) -> Result<()> {
    if !t.is_finite() {
        return Err(Error::InvalidParameter(format!("t must be finite, got {t}")));
    }
    if !alpha.is_finite() || alpha <= T::zero() {
        return Err(Error::InvalidParameter(format!(
            "alpha must be positive and finite, got {alpha}"
        )));
    }
    if !p.is_finite() || p <= T::zero() || p > T::cast(2.0) {
        return Err(Error::InvalidParameter(format!(
            "exponent p must lie in (0, 2], got {p}"
        )));
    }
    Ok(())
}

/// Global minimizer of `(u - t)^2 / 2 + alpha |u|^p` over the real line.
pub fn prox_scalar<T: Real>(t: T, alpha: T, p: T) -> Result<ProxResult<T>> {
    validate(t, alpha, p)?;
    let two = T::cast(2.0);

    if p == two {
        let u = t / (T::one() + two * alpha);
        return Ok(ProxResult {
            minimizer: u,
            objective_value: objective(u, t, alpha, p),
            newton_iterations: 0,
            branch: ProxBranch::ClosedFormQuadratic,
        });
    }
    if p == T::one() {
        let u = sign(t) * (t.abs() - alpha).max(T::zero());
        return Ok(ProxResult {
            minimizer: u,
            objective_value: objective(u, t, alpha, p),
            newton_iterations: 0,
            branch: ProxBranch::SoftThreshold,
        });
    }

    let t_abs = t.abs();
    if t_abs == T::zero() {
        return Ok(ProxResult {
            minimizer: T::zero(),
            objective_value: T::zero(),
            newton_iterations: 0,
            branch: ProxBranch::Zero,
        });
    }

    if p > T::one() {
        // Unique root of g(u) = u + alpha p u^{p-1} - |t| on (0, |t|):
        // g(0+) = -|t| < 0 and g(|t|) = alpha p |t|^{p-1} > 0. Both terms
        // are below |t| at the root, so u < (|t|/(alpha p))^{1/(p-1)} as
        // well; that cap keeps the bracket tight when alpha p is large and
        // p is barely above one (the root is then many orders of magnitude
        // below |t|).
        let cap = (t_abs / (alpha * p)).powf((p - T::one()).recip());
        let hi = if cap.is_finite() && cap < t_abs { cap } else { t_abs };
        let (root, iters) = newton_bracketed(t_abs, alpha, p, T::zero(), hi, hi)?;
        let u = sign(t) * root;
        return Ok(ProxResult {
            minimizer: u,
            objective_value: objective(u, t, alpha, p),
            newton_iterations: iters,
            branch: ProxBranch::Interior,
        });
    }

    // 0 < p < 1. Stationary points of the positive axis solve g(u) = 0
    // with g minimized at the inflection magnitude; no root at all when
    // g stays positive there.
    let one = T::one();
    let u_infl = (alpha * p * (one - p)).powf((two - p).recip());
    let g_infl = u_infl + alpha * p * pow_abs(u_infl, p - one) - t_abs;
    let f_zero = t * t / two;
    if g_infl >= T::zero() {
        return Ok(ProxResult {
            minimizer: T::zero(),
            objective_value: f_zero,
            newton_iterations: 0,
            branch: ProxBranch::Zero,
        });
    }
    // Larger root lives in (u_infl, |t|): g(|t|) = alpha p |t|^{p-1} > 0.
    let init = u_infl.max(t_abs - alpha * p * pow_abs(t_abs, p - one));
    let (root, iters) = newton_bracketed(t_abs, alpha, p, u_infl, t_abs, init)?;
    let f_root = objective(root, t_abs, alpha, p);
    // Ties (within a tiny objective margin) select zero, preferring the
    // sparse answer; the prox is set-valued exactly at the tie point.
    let tie = T::cast(1e-14).max(T::epsilon()) * f_zero.max(one);
    if f_root < f_zero - tie {
        let u = sign(t) * root;
        Ok(ProxResult {
            minimizer: u,
            objective_value: objective(u, t, alpha, p),
            newton_iterations: iters,
            branch: ProxBranch::Interior,
        })
    } else {
        Ok(ProxResult {
            minimizer: T::zero(),
            objective_value: f_zero,
            newton_iterations: iters,
            branch: ProxBranch::Zero,
        })
    }
}

/// Safeguarded Newton for `g(u) = u + alpha p u^{p-1} - t_abs` on the
/// bracket `[lo, hi]` with `g(lo) <= 0 <= g(hi)`. A Newton step that
/// leaves the bracket (or is not finite) falls back to bisection, and the
/// bracket keeps contracting either way. Returns the root and the
/// iterations spent.
fn newton_bracketed<T: Real>(
    t_abs: T,
    alpha: T,
    p: T,
    mut lo: T,
    mut hi: T,
    init: T,
) -> Result<(T, u32)> {
    let one = T::one();
    let two = T::cast(2.0);
    let tol = residual_tol(t_abs);
    let mut u = init;
    let mut g = u + alpha * p * pow_abs(u, p - one) - t_abs;
    let mut iters = 0u32;
    while g.abs() > tol {
        if iters >= NEWTON_CAP {
            return Err(Error::NoConvergence {
                iterations: iters as usize,
                residual: g.abs().to_f64().unwrap_or(f64::NAN),
            });
        }
        if g > T::zero() {
            hi = u;
        } else {
            lo = u;
        }
        let slope = one + alpha * p * (p - one) * pow_abs(u, p - two);
        let step = u - g / slope;
        u = if step.is_finite() && step > lo && step < hi {
            step
        } else {
            (lo + hi) / two
        };
        g = u + alpha * p * pow_abs(u, p - one) - t_abs;
        iters += 1;
    }
    Ok((u, iters))
}

/// Scalar prox with an optional box constraint `|u| <= c`.
///
/// For `p >= 1` the objective is convex in one variable, so the
/// constrained minimizer is the unconstrained one clamped to the box. For
/// `p < 1` the only candidates inside the box are `0` and the boundary, so
/// those objectives are compared directly (ties to zero again).
pub(crate) fn prox_scalar_bounded<T: Real>(
    t: T,
    alpha: T,
    p: T,
    bound: Option<T>,
) -> Result<ProxResult<T>> {
    let res = prox_scalar(t, alpha, p)?;
    let c = match bound {
        Some(c) => c,
        None => return Ok(res),
    };
    if res.minimizer.abs() <= c {
        return Ok(res);
    }
    if p >= T::one() {
        let u = sign(res.minimizer) * c;
        return Ok(ProxResult {
            minimizer: u,
            objective_value: objective(u, t, alpha, p),
            ..res
        });
    }
    let u_edge = sign(t) * c;
    let f_edge = objective(u_edge, t, alpha, p);
    let f_zero = t * t / T::cast(2.0);
    let tie = T::cast(1e-14).max(T::epsilon()) * f_zero.max(T::one());
    if f_edge < f_zero - tie {
        Ok(ProxResult {
            minimizer: u_edge,
            objective_value: f_edge,
            branch: ProxBranch::Interior,
            ..res
        })
    } else {
        Ok(ProxResult {
            minimizer: T::zero(),
            objective_value: f_zero,
            branch: ProxBranch::Zero,
            ..res
        })
    }
}

/// Coordinatewise prox of `x ↦ step_scaled_alpha ∑ |x_k|^{p_k}`: the
/// penalty is separable, so entry `k` is exactly the scalar prox at
/// exponent `p_k`. Coordinates are evaluated in index order.
pub fn prox_vector<T: Real>(
    x: &CoefficientVector<T>,
    step_scaled_alpha: T,
    exponents: &ExponentSequence<T>,
) -> Result<CoefficientVector<T>> {
    prox_vector_bounded(x, step_scaled_alpha, exponents, None)
}

pub(crate) fn prox_vector_bounded<T: Real>(
    x: &CoefficientVector<T>,
    step_scaled_alpha: T,
    exponents: &ExponentSequence<T>,
    bound: Option<T>,
) -> Result<CoefficientVector<T>> {
    let (lo, hi) = exponents.range_on(x.dim());
    if lo <= T::zero() || hi > T::cast(2.0) {
        return Err(Error::ExponentRegime(format!(
            "prox needs exponents in (0, 2], found range [{lo}, {hi}]"
        )));
    }
    let mut out = Vec::with_capacity(x.dim());
    for (i, &v) in x.as_slice().iter().enumerate() {
        let p = exponents.eval(i + 1);
        let res = prox_scalar_bounded(v, step_scaled_alpha, p, bound).map_err(|e| {
            Error::AtCoordinate {
                index: i + 1,
                source: Box::new(e),
            }
        })?;
        out.push(res.minimizer);
    }
    Ok(CoefficientVector::from_raw(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_bad_parameters() {
        assert!(prox_scalar(1.0, 0.0, 1.0).is_err());
        assert!(prox_scalar(1.0, -1.0, 1.0).is_err());
        assert!(prox_scalar(1.0, 1.0, 0.0).is_err());
        assert!(prox_scalar(1.0, 1.0, 2.5).is_err());
        assert!(prox_scalar(f64::NAN, 1.0, 1.0).is_err());
    }

    #[test]
    fn soft_threshold_closed_form() {
        let r = prox_scalar(1.0, 0.5, 1.0).unwrap();
        assert_eq!(r.minimizer, 0.5);
        assert_eq!(r.branch, ProxBranch::SoftThreshold);
        assert_eq!(r.newton_iterations, 0);

        let r = prox_scalar(-0.3, 0.5, 1.0).unwrap();
        assert_eq!(r.minimizer, 0.0);
        assert_eq!(r.branch, ProxBranch::SoftThreshold);
    }

    #[test]
    fn quadratic_closed_form() {
        let r = prox_scalar(3.0, 0.5, 2.0).unwrap();
        assert_eq!(r.minimizer, 1.5);
        assert_eq!(r.branch, ProxBranch::ClosedFormQuadratic);
    }

    /// For p = 3/2 the stationarity equation becomes a quadratic in
    /// sqrt(u): s^2 + alpha p s - |t| = 0, solved here independently.
    #[test]
    fn interior_root_matches_sqrt_substitution() {
        let (t, alpha, p) = (2.0_f64, 1.0, 1.5);
        let s = (-1.5 + (1.5_f64 * 1.5 + 4.0 * 2.0).sqrt()) / 2.0;
        let expected = s * s;
        let r = prox_scalar(t, alpha, p).unwrap();
        assert_eq!(r.branch, ProxBranch::Interior);
        assert!(
            (r.minimizer - expected).abs() <= 1e-10,
            "got {}, expected {expected}",
            r.minimizer
        );
        // Stationarity certificate.
        let resid = (r.minimizer + alpha * p * r.minimizer.powf(p - 1.0) - t).abs();
        assert!(resid <= 1e-10 * t.max(1.0));
    }

    /// Small input under a sublinear penalty: zero beats every interior
    /// candidate. A direct grid scan of the objective confirms it.
    #[test]
    fn sublinear_small_input_collapses_to_zero() {
        let (t, alpha, p) = (0.4_f64, 1.0, 0.5);
        let r = prox_scalar(t, alpha, p).unwrap();
        assert_eq!(r.minimizer, 0.0);
        assert_eq!(r.branch, ProxBranch::Zero);

        let f = |u: f64| 0.5 * (u - t) * (u - t) + alpha * u.abs().powf(p);
        let mut best = (0.0, f(0.0));
        let mut u = 0.0;
        while u <= 0.8 {
            if f(u) < best.1 {
                best = (u, f(u));
            }
            u += 1e-5;
        }
        assert_eq!(best.0, 0.0, "grid scan must agree that zero wins");
    }

    #[test]
    fn zero_input_fixes_origin() {
        for p in [0.3, 0.5, 1.3, 1.7] {
            let r = prox_scalar(0.0, 1.0, p).unwrap();
            assert_eq!(r.minimizer, 0.0);
            assert_eq!(r.objective_value, 0.0);
        }
    }

    /// The zero set of the sublinear prox is a symmetric interval whose
    /// boundary grows with alpha.
    #[test]
    fn sublinear_threshold_grows_with_alpha() {
        let p = 0.5;
        let mut last = 0.0;
        for alpha in [0.1, 0.3, 1.0, 3.0, 10.0] {
            let mut boundary = 0.0;
            let mut t = 0.005;
            while t < 20.0 {
                let r = prox_scalar(t, alpha, p).unwrap();
                let rneg = prox_scalar(-t, alpha, p).unwrap();
                assert_eq!(r.minimizer == 0.0, rneg.minimizer == 0.0, "symmetry");
                if r.minimizer == 0.0 {
                    boundary = t;
                } else {
                    break;
                }
                t += 0.005;
            }
            assert!(boundary > last, "threshold must grow: {boundary} vs {last}");
            last = boundary;
        }
    }

    #[test]
    fn vector_examples() {
        let ones = ExponentSequence::constant(1.0_f64).unwrap();
        let zero = CoefficientVector::zeros(4);
        let r = prox_vector(&zero, 0.5, &ones).unwrap();
        assert!(r.as_slice().iter().all(|&v| v == 0.0));

        let x = CoefficientVector::new(vec![2.0, -0.1]).unwrap();
        let r = prox_vector(&x, 0.5, &ones).unwrap();
        assert_eq!(r.as_slice(), &[1.5, 0.0]);

        let bad = ExponentSequence::constant(2.5_f64).unwrap();
        assert!(prox_vector(&x, 0.5, &bad).is_err());
    }

    /// Coordinatewise separability: the vector prox entry equals the
    /// scalar prox of that entry at its own exponent, bitwise.
    #[test]
    fn vector_is_exactly_coordinatewise() {
        let exps = ExponentSequence::<f64>::one_plus_inv_k();
        let x = CoefficientVector::new(vec![1.7, -0.4, 0.0, 3.2, -2.8]).unwrap();
        let r = prox_vector(&x, 0.7, &exps).unwrap();
        for i in 0..x.dim() {
            let s = prox_scalar(x[i], 0.7, exps.eval(i + 1)).unwrap();
            assert_eq!(r[i], s.minimizer);
        }
    }

    #[test]
    fn bounded_prox_clamps_and_compares() {
        // Convex: clamps.
        let r = prox_scalar_bounded(5.0, 0.1, 1.5, Some(1.0)).unwrap();
        assert_eq!(r.minimizer, 1.0);
        // Nonconvex: boundary beats zero for large t.
        let r = prox_scalar_bounded(5.0, 1.0, 0.5, Some(1.0)).unwrap();
        assert_eq!(r.minimizer, 1.0);
        // Nonconvex: zero beats a far boundary for small t.
        let r = prox_scalar_bounded(0.4, 1.0, 0.5, Some(1.0)).unwrap();
        assert_eq!(r.minimizer, 0.0);
    }

    #[test]
    fn works_at_f32() {
        let r = prox_scalar(1.0_f32, 0.5, 1.0).unwrap();
        assert_eq!(r.minimizer, 0.5);
        let r = prox_scalar(2.0_f32, 1.0, 1.5).unwrap();
        assert!((r.minimizer - 0.723_828_4).abs() < 1e-5);
    }

    proptest! {
        /// Sign preservation and magnitude shrinkage.
        #[test]
        fn shrinks_toward_zero(
            t in -20.0f64..20.0,
            alpha in 0.01f64..20.0,
            p in 0.05f64..2.0,
        ) {
            let r = prox_scalar(t, alpha, p).unwrap();
            prop_assert!(r.minimizer.abs() <= t.abs() + 1e-12);
            prop_assert!(r.minimizer == 0.0 || r.minimizer.signum() == t.signum());
            // The documented <= 60 holds on the reference grid; away from
            // it bisection-heavy corners get a loose cap.
            prop_assert!(r.newton_iterations <= 120);
        }

        /// The convex prox is 1-Lipschitz.
        #[test]
        fn nonexpansive_for_convex_exponents(
            t1 in -10.0f64..10.0,
            t2 in -10.0f64..10.0,
            alpha in 0.01f64..10.0,
            p in 1.0f64..2.0,
        ) {
            let r1 = prox_scalar(t1, alpha, p).unwrap();
            let r2 = prox_scalar(t2, alpha, p).unwrap();
            prop_assert!((r1.minimizer - r2.minimizer).abs() <= (t1 - t2).abs() + 1e-10);
        }

        /// Interior branches certify stationarity.
        #[test]
        fn interior_stationarity_certificate(
            t in 0.01f64..10.0,
            alpha in 0.01f64..10.0,
            p in 0.05f64..2.0,
        ) {
            let r = prox_scalar(t, alpha, p).unwrap();
            if r.branch == ProxBranch::Interior {
                let u = r.minimizer;
                let resid = (u + alpha * p * u.powf(p - 1.0) - t).abs();
                prop_assert!(resid <= 1e-10 * t.max(1.0));
            }
        }
    }
}
