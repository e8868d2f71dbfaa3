//! Dense factorization kernels.
//!
//! Matrices are `nalgebra` dynamic matrices (column-major). All routines are
//! pure functions of their inputs and deterministic for a fixed input.

mod angles;
mod cholesky;
mod pinv;
mod qr;
mod srrqr;
mod svd;
mod triangular;

pub use angles::principal_angles;
pub(crate) use cholesky::asymmetry;
pub use cholesky::{cholesky, CholeskyFactor};
pub use pinv::{pinv_apply, pseudo_inverse, PseudoInverse, PINV_RCOND};
pub use qr::{householder_qr, qr_column_pivoted, PivotedQr};
pub use srrqr::{srrqr, srrqr_bound, srrqr_with, SrrqrOptions, SrrqrResult};
pub use svd::{singular_values, spectral_norm, thin_svd, ThinSvd};
pub use triangular::{solve_triangular, Side, Triangle};

use crate::error::{DeimError, Result};

pub type Matrix = nalgebra::DMatrix<f64>;
pub type Vector = nalgebra::DVector<f64>;

/// Tolerance on `||Q^T Q - I||_F` for inputs that must have orthonormal columns.
pub const ORTHONORMAL_TOL: f64 = 1e-8;

/// Rejects empty matrices and matrices with NaN or infinite entries.
pub fn ensure_finite(a: &Matrix) -> Result<()> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(DeimError::Empty {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            if !a[(i, j)].is_finite() {
                return Err(DeimError::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

/// `||Q^T Q - I||_F`.
pub fn orthonormality_defect(q: &Matrix) -> f64 {
    let mut g = q.tr_mul(q);
    for i in 0..g.nrows() {
        g[(i, i)] -= 1.0;
    }
    g.norm()
}

pub fn ensure_orthonormal(q: &Matrix) -> Result<()> {
    let defect = orthonormality_defect(q);
    if defect.is_nan() || defect > ORTHONORMAL_TOL {
        return Err(DeimError::NotOrthonormal { defect });
    }
    Ok(())
}

/// Rows `indices` of `a`, in the given order. This is `S^T A` for the
/// selection operator `S` made of the identity columns `indices`.
pub fn select_rows(a: &Matrix, indices: &[usize]) -> Matrix {
    Matrix::from_fn(indices.len(), a.ncols(), |i, j| a[(indices[i], j)])
}

/// Columns `indices` of `a`, in the given order.
pub fn select_columns(a: &Matrix, indices: &[usize]) -> Matrix {
    Matrix::from_fn(a.nrows(), indices.len(), |i, j| a[(i, indices[j])])
}

/// Index of the entry of largest magnitude; ties go to the lowest index.
pub(crate) fn argmax_abs(values: impl IntoIterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        let a = v.abs();
        match best {
            Some((_, b)) if a <= b => {}
            _ => best = Some((i, a)),
        }
    }
    best.map(|(i, _)| i)
}
