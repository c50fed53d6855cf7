//! Linear forward maps between coefficient space and data space, with
//! adjoints and a power-iteration norm estimate.
//!
//! Finite-dimensional truncations stand in for operators on the full
//! sequence space; dimensions are experiment parameters. Operators are
//! immutable after construction, so concurrent applications are safe.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg;
use crate::penalty::{check_dims, CoefficientVector};
use crate::scalar::Real;

/// Vectors in the data space share the coefficient-vector representation.
pub type DataVector<T> = CoefficientVector<T>;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> DenseMatrix<T> {
    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::InvalidParameter(
                "dense matrix needs at least one row and one column".into(),
            ));
        }
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::Parse(format!(
                    "row {} has {} entries, expected {cols}",
                    i + 1,
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "non-finite entry in row {}",
                    i + 1
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows)
            .map(|i| self.data[i * self.cols..(i + 1) * self.cols].to_vec())
            .collect()
    }
}

/// The forward map `A` of the equation `Ax = y`.
#[derive(Debug, Clone, PartialEq)]
pub enum LinearOperator<T> {
    DenseMatrix(DenseMatrix<T>),
    Diagonal(Vec<T>),
    Identity(usize),
}

impl<T: Real> LinearOperator<T> {
    pub fn dense(matrix: DenseMatrix<T>) -> Self {
        Self::DenseMatrix(matrix)
    }

    pub fn dense_from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        Ok(Self::DenseMatrix(DenseMatrix::from_rows(rows)?))
    }

    pub fn diagonal(entries: Vec<T>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidParameter("diagonal needs dimension >= 1".into()));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite diagonal entry".into()));
        }
        Ok(Self::Diagonal(entries))
    }

    pub fn identity(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("identity needs dimension >= 1".into()));
        }
        Ok(Self::Identity(n))
    }

    /// Dimension of the coefficient (domain) space.
    pub fn domain_dim(&self) -> usize {
        match self {
            Self::DenseMatrix(m) => m.cols,
            Self::Diagonal(d) => d.len(),
            Self::Identity(n) => *n,
        }
    }

    /// Dimension of the data (range) space.
    pub fn range_dim(&self) -> usize {
        match self {
            Self::DenseMatrix(m) => m.rows,
            Self::Diagonal(d) => d.len(),
            Self::Identity(n) => *n,
        }
    }

    /// `y = Ax`.
    pub fn apply(&self, x: &CoefficientVector<T>) -> Result<DataVector<T>> {
        check_dims(self.domain_dim(), x.dim())?;
        Ok(CoefficientVector::from_raw(self.apply_slice(x.as_slice())))
    }

    pub(crate) fn apply_slice(&self, x: &[T]) -> Vec<T> {
        match self {
            Self::DenseMatrix(m) => {
                let mut y = Vec::with_capacity(m.rows);
                for i in 0..m.rows {
                    y.push(linalg::dot(&m.data[i * m.cols..(i + 1) * m.cols], x));
                }
                y
            }
            Self::Diagonal(d) => d.iter().zip(x).map(|(&di, &xi)| di * xi).collect(),
            Self::Identity(_) => x.to_vec(),
        }
    }

    /// `A* r`, the Hilbert-space adjoint applied to a data vector.
    pub fn apply_adjoint(&self, r: &DataVector<T>) -> Result<CoefficientVector<T>> {
        check_dims(self.range_dim(), r.dim())?;
        Ok(CoefficientVector::from_raw(self.apply_adjoint_slice(r.as_slice())))
    }

    pub(crate) fn apply_adjoint_slice(&self, r: &[T]) -> Vec<T> {
        match self {
            Self::DenseMatrix(m) => {
                let mut z = vec![T::zero(); m.cols];
                for (row, &ri) in m.data.chunks_exact(m.cols).zip(r) {
                    if ri == T::zero() {
                        continue;
                    }
                    for (zj, &aij) in z.iter_mut().zip(row) {
                        *zj += aij * ri;
                    }
                }
                z
            }
            Self::Diagonal(d) => d.iter().zip(r).map(|(&di, &ri)| di * ri).collect(),
            Self::Identity(_) => r.to_vec(),
        }
    }

    /// Estimate of `||A||^2` within 1% relative error. Diagonal and
    /// identity operators are exact; dense ones run power iteration on
    /// `A*A` with a seeded start vector, a relative eigenvalue-shift stop
    /// of 1e-6, and a 10^4 iteration cap.
    pub fn operator_norm_sq(&self, seed: u64) -> T {
        match self {
            Self::Identity(_) => T::one(),
            Self::Diagonal(d) => d
                .iter()
                .map(|&v| v * v)
                .fold(T::zero(), T::max),
            Self::DenseMatrix(_) => self.power_iteration_norm_sq(seed),
        }
    }

    fn power_iteration_norm_sq(&self, seed: u64) -> T {
        let n = self.domain_dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v: Vec<T> = (0..n)
            .map(|_| T::cast(rand_distr::StandardNormal.sample(&mut rng)))
            .collect();
        let nv = linalg::norm2(&v);
        if nv == T::zero() {
            v[0] = T::one();
        } else {
            for t in v.iter_mut() {
                *t /= nv;
            }
        }
        let shift_tol = T::cast(1e-6);
        let mut lambda = T::zero();
        for _ in 0..10_000 {
            let w = self.apply_adjoint_slice(&self.apply_slice(&v));
            let rayleigh = linalg::dot(&v, &w);
            let wn = linalg::norm2(&w);
            if wn == T::zero() {
                return T::zero();
            }
            for (vi, &wi) in v.iter_mut().zip(&w) {
                *vi = wi / wn;
            }
            if (rayleigh - lambda).abs() <= shift_tol * rayleigh.abs().max(T::one()) {
                return rayleigh;
            }
            lambda = rayleigh;
        }
        lambda
    }

    /// Gram matrix `A*A` (row-major, `n x n`), built by applying the
    /// operator to basis vectors.
    pub(crate) fn gram(&self) -> Vec<T> {
        let n = self.domain_dim();
        let mut g = vec![T::zero(); n * n];
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            e[j] = T::one();
            let col = self.apply_adjoint_slice(&self.apply_slice(&e));
            for i in 0..n {
                g[i * n + j] = col[i];
            }
            e[j] = T::zero();
        }
        g
    }

    /// Least-norm solution `w` of `A* w = xi`: solves the Gram system
    /// `A*A z = xi` and returns `w = A z`. The caller checks the residual.
    pub(crate) fn least_norm_adjoint_solution(&self, xi: &[T]) -> Result<Vec<T>> {
        let n = self.domain_dim();
        debug_assert_eq!(xi.len(), n);
        let z = linalg::solve_lu(n, self.gram(), xi.to_vec())?;
        Ok(self.apply_slice(&z))
    }
}
