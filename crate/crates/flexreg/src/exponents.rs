//! Exponent sequences `{p_k}` and the decision procedure for when the
//! variable-exponent sequence space collapses to `ℓ¹`.
//!
//! A sequence space `ℓ^{q_k}` with `q_k ≥ 1` equals `ℓ¹` exactly when some
//! integer `N > 1` makes `∑_k N^{-1/(q_k - 1)}` finite (with `N^{-∞} = 0`
//! where `q_k = 1`). The sublinear counterpart with `0 < p_k ≤ 1` asks for
//! `∑_k N^{π_k} < ∞` where `1/p_k + 1/π_k = 1`. Convergence of an infinite
//! series is not decidable from finitely many samples, so verdicts here are
//! computed per family from hard-coded analytic rules; partial sums are
//! attached only as corroborating diagnostics.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Rule `k ↦ p_k` for the enumerated symbolic families plus tabulated data.
#[derive(Debug, Clone, PartialEq)]
pub enum ExponentFamily<T> {
    /// `p_k = p` for all `k`.
    Constant(T),
    /// `q_k = 1 + 1/k`.
    OnePlusInvK,
    /// `q_k = 1 + 1/log(k)`.
    OnePlusInvLogK,
    /// `q_k = 1 + 1/log(k)^alpha` with `alpha` in `(0, 1)`.
    OnePlusInvLogKAlpha(T),
    /// `q_k = 1 + c·r^k` with `c > 0` and `r` in `(0, 1)`.
    OnePlusGeometric(T, T),
    /// Explicit leading values followed by a constant tail value.
    Tabulated(Vec<T>, T),
}

/// An exponent sequence: a family rule, the index it starts at, and cached
/// range metadata.
///
/// Evaluation is 1-based: `eval(k)` applies the family formula at the
/// shifted index `j = k + offset - 1`, so log-based families can start past
/// `log(1) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentSequence<T> {
    family: ExponentFamily<T>,
    offset: usize,
    inf_p: T,
    sup_p: T,
    limit_p: T,
}

/// Outcome of the `ℓ^{p_k} = ℓ¹` decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceVerdict {
    /// The space coincides with `ℓ¹`.
    EqualToL1,
    /// The space strictly contains `ℓ¹`.
    StrictlyLargerThanL1,
    /// Not decided (tabulated data carries no asymptotic rule).
    Inconclusive,
}

/// Classification result with the convergence witness and a partial-sum
/// trace for inspection.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceClassification<T> {
    pub verdict: SpaceVerdict,
    /// Smallest integer `N > 1` for which the criterion series converges.
    pub witness_n: Option<u32>,
    /// `(N, partial sum at cutoff)` pairs for the criterion series.
    pub diagnostic: Vec<(u32, T)>,
}

/// Growth of the exponent `a_k` in the criterion series `∑_k N^{-a_k}`.
///
/// Both decision conditions reduce to this form: the superlinear one with
/// `a_k = 1/(q_k - 1)` and the sublinear one with `a_k = p_k/(1 - p_k)`
/// (so `N^{π_k} = N^{-a_k}`). Growth of `a_k` decides convergence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ExponentGrowth {
    /// `a_k = ∞` for all relevant `k`; every term vanishes.
    EventuallyInfinite,
    /// `a_k` bounded: terms are a constant positive amount, series diverges.
    Bounded,
    /// `a_k` grows like the index: geometric series, converges for `N ≥ 2`.
    Linear,
    /// `a_k = log j`: `N^{-log j} = j^{-log N}`, converges iff `N > e`.
    Logarithmic,
    /// `a_k = log(j)^alpha`, `alpha < 1`: diverges for every `N` by Cauchy
    /// condensation (`∑ 2^m N^{-(m log 2)^alpha}` has unbounded terms).
    SubLogarithmicPower,
    /// `a_k` grows geometrically: dominated by a geometric series for `N ≥ 2`.
    Geometric,
}

fn growth_verdict(growth: ExponentGrowth) -> (SpaceVerdict, Option<u32>) {
    match growth {
        ExponentGrowth::EventuallyInfinite
        | ExponentGrowth::Linear
        | ExponentGrowth::Geometric => (SpaceVerdict::EqualToL1, Some(2)),
        ExponentGrowth::Logarithmic => (SpaceVerdict::EqualToL1, Some(3)),
        ExponentGrowth::Bounded | ExponentGrowth::SubLogarithmicPower => {
            (SpaceVerdict::StrictlyLargerThanL1, None)
        }
    }
}

/// Cutoff for the corroborating partial sums attached to classifications.
pub const DIAGNOSTIC_CUTOFF: usize = 20_000;

/// Base values `N` sampled for the diagnostic trace.
pub const DIAGNOSTIC_NS: [u32; 4] = [2, 3, 8, 64];

impl<T: Real> ExponentSequence<T> {
    fn build(family: ExponentFamily<T>, offset: usize) -> Result<Self> {
        if offset < 1 {
            return Err(Error::InvalidParameter("offset must be at least 1".into()));
        }
        match &family {
            ExponentFamily::Constant(p) => {
                if !p.is_finite() || *p <= T::zero() {
                    return Err(Error::InvalidParameter(format!(
                        "constant exponent must be positive and finite, got {p}"
                    )));
                }
            }
            ExponentFamily::OnePlusInvK => {}
            ExponentFamily::OnePlusInvLogK => {
                if offset < 2 {
                    return Err(Error::InvalidParameter(
                        "log-based families need offset >= 2".into(),
                    ));
                }
            }
            ExponentFamily::OnePlusInvLogKAlpha(alpha) => {
                if offset < 2 {
                    return Err(Error::InvalidParameter(
                        "log-based families need offset >= 2".into(),
                    ));
                }
                if !(*alpha > T::zero() && *alpha < T::one()) {
                    return Err(Error::InvalidParameter(format!(
                        "alpha must lie in (0, 1), got {alpha}"
                    )));
                }
            }
            ExponentFamily::OnePlusGeometric(c, r) => {
                if !c.is_finite() || *c <= T::zero() {
                    return Err(Error::InvalidParameter(format!(
                        "geometric scale c must be positive, got {c}"
                    )));
                }
                if !(*r > T::zero() && *r < T::one()) {
                    return Err(Error::InvalidParameter(format!(
                        "geometric ratio r must lie in (0, 1), got {r}"
                    )));
                }
            }
            ExponentFamily::Tabulated(values, tail) => {
                if values.iter().any(|v| !v.is_finite() || *v <= T::zero()) {
                    return Err(Error::InvalidParameter(
                        "tabulated exponents must be positive and finite".into(),
                    ));
                }
                if !tail.is_finite() || *tail <= T::zero() {
                    return Err(Error::InvalidParameter(format!(
                        "tabulated tail must be positive and finite, got {tail}"
                    )));
                }
            }
        }
        let (inf_p, sup_p, limit_p) = range_metadata(&family, offset);
        Ok(Self {
            family,
            offset,
            inf_p,
            sup_p,
            limit_p,
        })
    }

    /// Constant sequence `p_k = p`, `p > 0`.
    pub fn constant(p: T) -> Result<Self> {
        Self::build(ExponentFamily::Constant(p), 1)
    }

    /// `q_k = 1 + 1/k`.
    pub fn one_plus_inv_k() -> Self {
        Self::build(ExponentFamily::OnePlusInvK, 1).expect("valid family")
    }

    /// `q_k = 1 + 1/log(k)`, started at index 2.
    pub fn one_plus_inv_log_k() -> Self {
        Self::build(ExponentFamily::OnePlusInvLogK, 2).expect("valid family")
    }

    /// `q_k = 1 + 1/log(k)^alpha`, `alpha` in `(0, 1)`, started at index 2.
    pub fn one_plus_inv_log_k_alpha(alpha: T) -> Result<Self> {
        Self::build(ExponentFamily::OnePlusInvLogKAlpha(alpha), 2)
    }

    /// `q_k = 1 + c·r^k`, `c > 0`, `r` in `(0, 1)`.
    pub fn one_plus_geometric(c: T, r: T) -> Result<Self> {
        Self::build(ExponentFamily::OnePlusGeometric(c, r), 1)
    }

    /// Explicit leading values with a constant tail.
    pub fn tabulated(values: Vec<T>, tail: T) -> Result<Self> {
        Self::build(ExponentFamily::Tabulated(values, tail), 1)
    }

    /// Same family started at a different index (log families need `>= 2`).
    pub fn with_offset(self, offset: usize) -> Result<Self> {
        Self::build(self.family, offset)
    }

    /// Rebuilds a sequence from its parts, validating them.
    pub fn from_parts(family: ExponentFamily<T>, offset: usize) -> Result<Self> {
        Self::build(family, offset)
    }

    pub fn family(&self) -> &ExponentFamily<T> {
        &self.family
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    /// Infimum of the evaluated values (1 for families decaying to 1).
    pub fn inf_p(&self) -> T {
        self.inf_p
    }

    /// Supremum of the evaluated values (attained at `k = 1` for the
    /// monotone families).
    pub fn sup_p(&self) -> T {
        self.sup_p
    }

    /// Limit of `p_k` as `k → ∞`.
    pub fn limit_p(&self) -> T {
        self.limit_p
    }

    /// Evaluates `p_k` at `k >= 1`. Total: every family is defined for all
    /// such `k` and always returns a positive value.
    pub fn eval(&self, k: usize) -> T {
        assert!(k >= 1, "exponent sequences are 1-indexed");
        let j = k + self.offset - 1;
        let jt = T::from_usize(j).expect("index fits the scalar type");
        match &self.family {
            ExponentFamily::Constant(p) => *p,
            ExponentFamily::OnePlusInvK => T::one() + jt.recip(),
            ExponentFamily::OnePlusInvLogK => T::one() + jt.ln().recip(),
            ExponentFamily::OnePlusInvLogKAlpha(alpha) => {
                T::one() + jt.ln().powf(*alpha).recip()
            }
            ExponentFamily::OnePlusGeometric(c, r) => T::one() + *c * r.powf(jt),
            ExponentFamily::Tabulated(values, tail) => {
                if j <= values.len() {
                    values[j - 1]
                } else {
                    *tail
                }
            }
        }
    }

    /// Minimum and maximum of `p_1..p_n` (cheap for the monotone families).
    pub fn range_on(&self, n: usize) -> (T, T) {
        assert!(n >= 1);
        match &self.family {
            ExponentFamily::Constant(p) => (*p, *p),
            ExponentFamily::Tabulated(_, _) => {
                let mut lo = self.eval(1);
                let mut hi = lo;
                for k in 2..=n {
                    let v = self.eval(k);
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                (lo, hi)
            }
            // Remaining families are strictly decreasing in k.
            _ => (self.eval(n), self.eval(1)),
        }
    }

    /// Decides whether `ℓ^{q_k} = ℓ¹` for a superlinear sequence
    /// (`q_k ≥ 1`), i.e. whether some `N > 1` makes `∑_k N^{-1/(q_k-1)}`
    /// finite, with the convention `N^{-∞} = 0` at `q_k = 1`.
    pub fn classify_superlinear(&self) -> Result<SpaceClassification<T>> {
        if self.inf_p < T::one() {
            return Err(Error::ExponentRegime(format!(
                "classify_superlinear needs inf p_k >= 1, got {}; use classify_sublinear",
                self.inf_p
            )));
        }
        let growth = match &self.family {
            ExponentFamily::Constant(p) => Some(if *p == T::one() {
                ExponentGrowth::EventuallyInfinite
            } else {
                ExponentGrowth::Bounded
            }),
            ExponentFamily::OnePlusInvK => Some(ExponentGrowth::Linear),
            ExponentFamily::OnePlusInvLogK => Some(ExponentGrowth::Logarithmic),
            ExponentFamily::OnePlusInvLogKAlpha(_) => Some(ExponentGrowth::SubLogarithmicPower),
            ExponentFamily::OnePlusGeometric(_, _) => Some(ExponentGrowth::Geometric),
            ExponentFamily::Tabulated(_, _) => None,
        };
        Ok(self.classification_from_growth(growth, |seq, n, k| {
            superlinear_term(n, seq.eval(k))
        }))
    }

    /// Decides whether `ℓ^{p_k} = ℓ¹` for a sublinear sequence
    /// (`0 < p_k ≤ 1`), i.e. whether some `N > 1` makes `∑_k N^{π_k}`
    /// finite for `1/p_k + 1/π_k = 1` (`π_k = -∞` at `p_k = 1`).
    pub fn classify_sublinear(&self) -> Result<SpaceClassification<T>> {
        if self.sup_p > T::one() {
            return Err(Error::ExponentRegime(format!(
                "classify_sublinear needs sup p_k <= 1, got {}; use classify_superlinear",
                self.sup_p
            )));
        }
        let growth = match &self.family {
            ExponentFamily::Constant(p) => Some(if *p == T::one() {
                ExponentGrowth::EventuallyInfinite
            } else {
                // a_k = p/(1-p) is a positive constant.
                ExponentGrowth::Bounded
            }),
            ExponentFamily::Tabulated(_, _) => None,
            // The 1 + ... families never satisfy sup <= 1; unreachable here.
            _ => unreachable!("superlinear families rejected by the sup check"),
        };
        Ok(self.classification_from_growth(growth, |seq, n, k| {
            sublinear_term(n, seq.eval(k))
        }))
    }

    fn classification_from_growth(
        &self,
        growth: Option<ExponentGrowth>,
        term: impl Fn(&Self, T, usize) -> T,
    ) -> SpaceClassification<T> {
        let (verdict, witness_n) = match growth {
            Some(g) => growth_verdict(g),
            None => (SpaceVerdict::Inconclusive, None),
        };
        let diagnostic = DIAGNOSTIC_NS
            .iter()
            .map(|&n| {
                let nt = T::from_u32(n).expect("small integer");
                let mut sum = T::zero();
                for k in 1..=DIAGNOSTIC_CUTOFF {
                    sum += term(self, nt, k);
                }
                (n, sum)
            })
            .collect();
        SpaceClassification {
            verdict,
            witness_n,
            diagnostic,
        }
    }
}

/// Term `N^{-1/(q-1)}` with `N^{-∞} = 0` at `q <= 1`.
fn superlinear_term<T: Real>(n: T, q: T) -> T {
    if q <= T::one() {
        T::zero()
    } else {
        (-(n.ln()) / (q - T::one())).exp()
    }
}

/// Term `N^{π}` for `π = p/(p-1)`, with `N^{-∞} = 0` at `p >= 1`.
fn sublinear_term<T: Real>(n: T, p: T) -> T {
    if p >= T::one() {
        T::zero()
    } else {
        (n.ln() * p / (p - T::one())).exp()
    }
}

fn range_metadata<T: Real>(family: &ExponentFamily<T>, offset: usize) -> (T, T, T) {
    let one = T::one();
    let ot = T::from_usize(offset).expect("offset fits the scalar type");
    match family {
        ExponentFamily::Constant(p) => (*p, *p, *p),
        ExponentFamily::OnePlusInvK => (one, one + ot.recip(), one),
        ExponentFamily::OnePlusInvLogK => (one, one + ot.ln().recip(), one),
        ExponentFamily::OnePlusInvLogKAlpha(alpha) => {
            (one, one + ot.ln().powf(*alpha).recip(), one)
        }
        ExponentFamily::OnePlusGeometric(c, r) => (one, one + *c * r.powf(ot), one),
        ExponentFamily::Tabulated(values, tail) => {
            let mut lo = *tail;
            let mut hi = *tail;
            for v in values.iter().skip(offset - 1) {
                lo = lo.min(*v);
                hi = hi.max(*v);
            }
            (lo, hi, *tail)
        }
    }
}
