//! Symmetric linear operators that are probed only through matrix-vector
//! products.
//!
//! [`SymmetricOperator`] is the single abstraction the estimators consume.
//! Concrete realizations are the packed [`DenseSymmetric`] matrix, the
//! coordinate-list [`SparseSymmetric`] matrix used for large Matrix Market
//! inputs, the structured [`TestMatrix`] families with closed-form diagonals,
//! and [`MatrixFree`], a closure wrapper with no entry access at all.

mod dense;
mod market;
mod test_matrix;

pub use dense::{DenseSymmetric, SparseSymmetric};
pub use market::{load_matrix_market, read_matrix_market, LoadedMatrix, DENSE_DIMENSION_LIMIT};
pub use test_matrix::{make_test_matrix, TestMatrix, TestMatrixKind};

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("dimension mismatch: operator has dimension {expected}, vector has length {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("dimension must be at least {min}, got {found}")]
    DimensionTooSmall { min: usize, found: usize },
    #[error("operation `{0}` needs explicit matrix entries, which this operator does not expose")]
    Unsupported(&'static str),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("matrix is not square: {rows} x {cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("line {line}: entry ({row}, {col}) = {upper} differs from its transpose {lower}")]
    Asymmetric {
        line: usize,
        row: usize,
        col: usize,
        upper: f64,
        lower: f64,
    },
    #[error("i/o error reading {path}: {message}")]
    Io { path: String, message: String },
}

/// A real symmetric `n x n` matrix accessed through products `A v`.
///
/// Implementations must be pure: `apply_into` may be called concurrently from
/// many threads and has to return the same result for the same input.
pub trait SymmetricOperator: Send + Sync {
    fn dim(&self) -> usize;

    /// Writes `A v` into `out`. Both slices have length [`dim`](Self::dim);
    /// callers go through [`apply`](Self::apply) or
    /// [`apply_checked`](Self::apply_checked) for the length checks.
    fn apply_into(&self, v: &[f64], out: &mut [f64]);

    /// Entry `a_ij`, when the realization stores or can compute it.
    fn entry(&self, _i: usize, _j: usize) -> Option<f64> {
        None
    }

    fn apply(&self, v: &[f64]) -> Result<Vec<f64>, OperatorError> {
        let mut out = vec![0.0; self.dim()];
        self.apply_checked(v, &mut out)?;
        Ok(out)
    }

    fn apply_checked(&self, v: &[f64], out: &mut [f64]) -> Result<(), OperatorError> {
        let n = self.dim();
        if v.len() != n {
            return Err(OperatorError::DimensionMismatch {
                expected: n,
                found: v.len(),
            });
        }
        if out.len() != n {
            return Err(OperatorError::DimensionMismatch {
                expected: n,
                found: out.len(),
            });
        }
        self.apply_into(v, out);
        Ok(())
    }

    /// The exact diagonal. Structured families override this with their
    /// closed forms; the default reads it off [`entry`](Self::entry).
    fn exact_diag(&self) -> Result<DiagonalVector, OperatorError> {
        (0..self.dim())
            .map(|i| self.entry(i, i).ok_or(OperatorError::Unsupported("exact_diag")))
            .collect::<Result<Vec<_>, _>>()
            .map(DiagonalVector::new)
    }

    /// Dense realization, available whenever entries are.
    fn to_dense(&self) -> Result<DenseSymmetric, OperatorError> {
        let n = self.dim();
        let mut lower = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in 0..=i {
                lower.push(self.entry(i, j).ok_or(OperatorError::Unsupported("to_dense"))?);
            }
        }
        DenseSymmetric::from_lower_packed(n, lower)
    }
}

impl<T: SymmetricOperator + ?Sized> SymmetricOperator for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        (**self).apply_into(v, out)
    }
    fn entry(&self, i: usize, j: usize) -> Option<f64> {
        (**self).entry(i, j)
    }
    fn exact_diag(&self) -> Result<DiagonalVector, OperatorError> {
        (**self).exact_diag()
    }
    fn to_dense(&self) -> Result<DenseSymmetric, OperatorError> {
        (**self).to_dense()
    }
}

impl<T: SymmetricOperator + ?Sized> SymmetricOperator for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        (**self).apply_into(v, out)
    }
    fn entry(&self, i: usize, j: usize) -> Option<f64> {
        (**self).entry(i, j)
    }
    fn exact_diag(&self) -> Result<DiagonalVector, OperatorError> {
        (**self).exact_diag()
    }
    fn to_dense(&self) -> Result<DenseSymmetric, OperatorError> {
        (**self).to_dense()
    }
}

/// Diagonal entries, exact or estimated.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalVector(Vec<f64>);

impl DiagonalVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// `max_i |d_i|`, the 2-norm of the diagonal matrix.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }
}

impl std::ops::Index<usize> for DiagonalVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl From<Vec<f64>> for DiagonalVector {
    fn from(values: Vec<f64>) -> Self {
        Self(values)
    }
}

/// An operator known only through a closure. It has no entries, so bound
/// constants and exact diagonals are unavailable for it.
pub struct MatrixFree<F> {
    dim: usize,
    apply: F,
}

impl<F> MatrixFree<F>
where
    F: Fn(&[f64], &mut [f64]) + Send + Sync,
{
    pub fn new(dim: usize, apply: F) -> Self {
        Self { dim, apply }
    }
}

impl<F> fmt::Debug for MatrixFree<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MatrixFree").field("dim", &self.dim).finish()
    }
}

impl<F> SymmetricOperator for MatrixFree<F>
where
    F: Fn(&[f64], &mut [f64]) + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        (self.apply)(v, out)
    }
}
