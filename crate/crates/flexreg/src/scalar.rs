//! Scalar abstraction: every module is generic over a floating-point type.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar the toolkit is generic over (`f32` or `f64`).
pub trait Real:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + 'static
{
    /// Converts an `f64` constant, e.g. a tolerance, into `Self`.
    ///
    /// Constants below the target type's subnormal range flush to zero,
    /// which is the intended reading of "treat as zero" thresholds.
    fn cast(value: f64) -> Self {
        Self::from_f64(value).expect("finite f64 constant converts to any Real")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Absolute floor below which a magnitude is treated as exactly zero when
/// raising to a power, so `p * ln|t|` never overflows to `-inf * 0` noise.
pub const POW_ZERO_FLOOR: f64 = 1e-300;

/// `|t|^p` for `p > 0`, with `|t|` at or below the floor mapped to zero.
/// `|0|^p = 0` for every `p > 0`; no NaN paths.
pub fn pow_abs<T: Real>(t: T, p: T) -> T {
    let a = t.abs();
    if a <= T::cast(POW_ZERO_FLOOR) {
        T::zero()
    } else {
        a.powf(p)
    }
}

/// Sign of `t` as a scalar in `{-1, 0, 1}`.
pub fn sign<T: Real>(t: T) -> T {
    if t > T::zero() {
        T::one()
    } else if t < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pow_abs_zero_is_zero_for_every_exponent() {
        for p in [0.1_f64, 0.5, 1.0, 1.7, 2.0] {
            assert_eq!(pow_abs(0.0, p), 0.0);
            assert_eq!(pow_abs(-0.0, p), 0.0);
        }
    }

    #[test]
    fn pow_abs_matches_exp_log_route() {
        for &t in &[-3.5_f64, -1.0, 0.25, 2.0, 10.0] {
            for &p in &[0.3, 0.5, 1.0, 1.5, 2.0] {
                let got = pow_abs(t, p);
                let want = (p * t.abs().ln()).exp();
                assert!((got - want).abs() <= 1e-13 * want.max(1.0));
            }
        }
        // Integer powers of integer bases are exact.
        assert_eq!(pow_abs(3.0_f64, 1.0), 3.0);
        assert_eq!(pow_abs(-3.0_f64, 2.0), 9.0);
    }

    #[test]
    fn pow_abs_floor_flushes_to_zero() {
        assert_eq!(pow_abs(1e-301_f64, 0.5), 0.0);
        // f32 instantiation: the f64 floor flushes to zero, so only exact
        // zero is floored, which is the right behaviour at that precision.
        assert_eq!(pow_abs(1e-30_f32, 0.5), 1e-30_f32.powf(0.5));
    }

    #[test]
    fn sign_convention() {
        assert_eq!(sign(3.0_f64), 1.0);
        assert_eq!(sign(-0.5_f64), -1.0);
        assert_eq!(sign(0.0_f64), 0.0);
    }
}
