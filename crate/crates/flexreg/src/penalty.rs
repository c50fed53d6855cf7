//! The variable-exponent penalty `∑_k |x_k|^{p_k}`, its induced metric,
//! gradient, Bregman distance, and the weighted norm used in error bounds.
//!
//! Everything here operates on explicit truncations of length `n`; there is
//! no lazy infinite-sequence machinery. Coefficients are real: the
//! optimality conditions downstream are written with a scalar sign.

use crate::error::{Error, Result};
use crate::exponents::ExponentSequence;
use crate::scalar::{pow_abs, sign, Real};

/// A finitely supported real coefficient sequence, truncated at dimension
/// `n >= 1`. All entries are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector<T>(Vec<T>);

impl<T: Real> CoefficientVector<T> {
    /// Wraps a vector of coefficients, checking the type invariants.
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter(
                "coefficient vector needs dimension >= 1".into(),
            ));
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite entry at coordinate {}",
                idx + 1
            )));
        }
        Ok(Self(values))
    }

    /// Wraps values produced by internal arithmetic without re-validating.
    pub(crate) fn from_raw(values: Vec<T>) -> Self {
        debug_assert!(!values.is_empty());
        Self(values)
    }

    /// The zero vector of dimension `n`.
    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1);
        Self(vec![T::zero(); n])
    }

    /// Truncation dimension `n`.
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<T> {
        self.0
    }

    /// Indices `k` (1-based) with `|x_k|` above the support threshold.
    pub fn support(&self, threshold: T) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, v)| v.abs() > threshold)
            .map(|(i, _)| i + 1)
            .collect()
    }

    /// Componentwise difference, checking dimensions.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        check_dims(self.dim(), other.dim())?;
        Ok(Self::from_raw(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(&a, &b)| a - b)
                .collect(),
        ))
    }

    /// Largest absolute entry difference, checking dimensions.
    pub fn linf_distance(&self, other: &Self) -> Result<T> {
        check_dims(self.dim(), other.dim())?;
        Ok(self
            .0
            .iter()
            .zip(&other.0)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max))
    }
}

impl<T> std::ops::Index<usize> for CoefficientVector<T> {
    type Output = T;
    /// 0-based storage access; the 1-based index convention applies to
    /// exponent evaluation and reported support lists, not to this accessor.
    fn index(&self, i: usize) -> &T {
        &self.0[i]
    }
}

pub(crate) fn check_dims(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        Err(Error::DimensionMismatch { expected, got })
    } else {
        Ok(())
    }
}

/// Pairing of an exponent sequence with a regularization weight `alpha > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltySpec<T> {
    exponents: ExponentSequence<T>,
    alpha: T,
}

impl<T: Real> PenaltySpec<T> {
    pub fn new(exponents: ExponentSequence<T>, alpha: T) -> Result<Self> {
        if !alpha.is_finite() || alpha <= T::zero() {
            return Err(Error::InvalidParameter(format!(
                "regularization weight alpha must be positive and finite, got {alpha}"
            )));
        }
        Ok(Self { exponents, alpha })
    }

    pub fn exponents(&self) -> &ExponentSequence<T> {
        &self.exponents
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }
}

/// `∑_{k=1}^n |x_k|^{p_k}`. Zero exactly when `x = 0`.
pub fn fnorm<T: Real>(x: &CoefficientVector<T>, exponents: &ExponentSequence<T>) -> T {
    fnorm_slice(x.as_slice(), exponents)
}

pub(crate) fn fnorm_slice<T: Real>(values: &[T], exponents: &ExponentSequence<T>) -> T {
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| pow_abs(v, exponents.eval(i + 1)))
        .fold(T::zero(), |acc, t| acc + t)
}

/// The induced translation-invariant metric `d(x, y) = ∑ |x_k - y_k|^{p_k}`.
pub fn fmetric<T: Real>(
    x: &CoefficientVector<T>,
    y: &CoefficientVector<T>,
    exponents: &ExponentSequence<T>,
) -> Result<T> {
    check_dims(x.dim(), y.dim())?;
    Ok(x.as_slice()
        .iter()
        .zip(y.as_slice())
        .enumerate()
        .map(|(i, (&a, &b))| pow_abs(a - b, exponents.eval(i + 1)))
        .fold(T::zero(), |acc, t| acc + t))
}

/// Gateaux derivative of the penalty at `x`:
/// `{q_k |x_k|^{q_k-1} sign(x_k)}`. Needs every evaluated `q_k > 1`,
/// otherwise `|t|^{q}` is not differentiable at the origin.
pub fn penalty_gradient<T: Real>(
    x: &CoefficientVector<T>,
    exponents: &ExponentSequence<T>,
) -> Result<CoefficientVector<T>> {
    let (lo, _) = exponents.range_on(x.dim());
    if lo <= T::one() {
        return Err(Error::ExponentRegime(format!(
            "penalty_gradient needs q_k > 1 on the truncation, found min {lo}"
        )));
    }
    let grad = x
        .as_slice()
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let q = exponents.eval(i + 1);
            q * pow_abs(v, q - T::one()) * sign(v)
        })
        .collect();
    Ok(CoefficientVector::from_raw(grad))
}

/// Bregman distance of the penalty between `x` and `y`:
/// `∑_k |x_k|^{q_k} - |y_k|^{q_k} - q_k sign(y_k)|y_k|^{q_k-1}(x_k - y_k)`.
/// Requires `1 < q_k <= 2` on the truncation; nonnegative by convexity.
pub fn bregman_distance<T: Real>(
    x: &CoefficientVector<T>,
    y: &CoefficientVector<T>,
    exponents: &ExponentSequence<T>,
) -> Result<T> {
    check_dims(x.dim(), y.dim())?;
    let (lo, hi) = exponents.range_on(x.dim());
    if lo <= T::one() || hi > T::cast(2.0) {
        return Err(Error::ExponentRegime(format!(
            "bregman_distance needs exponents in (1, 2], found range [{lo}, {hi}]"
        )));
    }
    let mut sum = T::zero();
    for (i, (&a, &b)) in x.as_slice().iter().zip(y.as_slice()).enumerate() {
        let q = exponents.eval(i + 1);
        sum = sum + pow_abs(a, q)
            - pow_abs(b, q)
            - q * sign(b) * pow_abs(b, q - T::one()) * (a - b);
    }
    Ok(sum)
}

/// Weighted norm `sqrt(∑_k (q_k - 1) x_k^2)` with weights `q_k - 1`; this
/// is the norm the convergence-rate bound is stated in. Panics if some
/// evaluated `q_k < 1` (negative weight).
pub fn weighted_l2_norm<T: Real>(x: &CoefficientVector<T>, exponents: &ExponentSequence<T>) -> T {
    let (lo, _) = exponents.range_on(x.dim());
    assert!(
        lo >= T::one(),
        "weighted_l2_norm needs q_k >= 1 on the truncation"
    );
    x.as_slice()
        .iter()
        .enumerate()
        .map(|(i, &v)| (exponents.eval(i + 1) - T::one()) * v * v)
        .fold(T::zero(), |acc, t| acc + t)
        .sqrt()
}
