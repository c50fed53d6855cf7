//! Small dense kernels shared by the operator and experiment modules.
//! Summation order is fixed everywhere: runs are bit-reproducible.

use crate::error::{Error, Result};
use crate::scalar::Real;

pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(&x, &y)| x * y)
        .fold(T::zero(), |acc, t| acc + t)
}

pub(crate) fn norm2<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Solves `a x = b` for square row-major `a` by LU with partial pivoting.
/// `a` and `b` are consumed as scratch. Fails on a vanishing pivot.
pub(crate) fn solve_lu<T: Real>(n: usize, mut a: Vec<T>, mut b: Vec<T>) -> Result<Vec<T>> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);
    let scale = a
        .iter()
        .map(|v| v.abs())
        .fold(T::zero(), T::max)
        .max(T::one());
    let tiny = T::epsilon() * scale * T::cast(n as f64);
    for col in 0..n {
        let mut pivot = col;
        for row in col + 1..n {
            if a[row * n + col].abs() > a[pivot * n + col].abs() {
                pivot = row;
            }
        }
        if a[pivot * n + col].abs() <= tiny {
            return Err(Error::SingularSystem);
        }
        if pivot != col {
            for j in 0..n {
                a.swap(col * n + j, pivot * n + j);
            }
            b.swap(col, pivot);
        }
        let d = a[col * n + col];
        for row in col + 1..n {
            let factor = a[row * n + col] / d;
            if factor == T::zero() {
                continue;
            }
            for j in col..n {
                let v = a[col * n + j];
                a[row * n + j] -= factor * v;
            }
            let pivot_b = b[col];
            b[row] -= factor * pivot_b;
        }
    }
    let mut x = vec![T::zero(); n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for j in row + 1..n {
            acc -= a[row * n + j] * x[j];
        }
        x[row] = acc / a[row * n + row];
    }
    Ok(x)
}
