use super::{ensure_finite, Matrix};
use crate::error::{DeimError, Result};

/// `P^T W P = L L^T`, with `(P^T x)_i = x[perm[i]]`.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    pub l: Matrix,
    pub perm: Vec<usize>,
}

impl CholeskyFactor {
    pub fn is_identity_perm(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, &p)| i == p)
    }
}

/// Relative asymmetry `||W - W^T||_F / ||W||_F`.
pub(crate) fn asymmetry(w: &Matrix) -> f64 {
    let nrm = w.norm();
    if nrm == 0.0 {
        return 0.0;
    }
    (w - w.transpose()).norm() / nrm
}

/// Dense Cholesky factorization of `(W + W^T) / 2`.
///
/// With `pivoted` set, the largest remaining diagonal entry is eliminated
/// first (lowest index on ties). A non-positive pivot yields
/// [`DeimError::NotPositiveDefinite`] carrying the 1-based elimination step.
pub fn cholesky(w: &Matrix, pivoted: bool) -> Result<CholeskyFactor> {
    ensure_finite(w)?;
    let m = w.nrows();
    if w.ncols() != m {
        return Err(DeimError::DimensionMismatch {
            expected: m,
            found: w.ncols(),
        });
    }
    let asym = asymmetry(w);
    if asym > 1e-10 {
        log::warn!("symmetrizing input with relative asymmetry {asym:.3e}");
    }
    let mut a = (w + w.transpose()) * 0.5;
    let mut perm: Vec<usize> = (0..m).collect();

    // Right-looking elimination.
    for k in 0..m {
        if pivoted {
            let mut p = k;
            for i in k + 1..m {
                if a[(i, i)] > a[(p, p)] {
                    p = i;
                }
            }
            if p != k {
                a.swap_rows(k, p);
                a.swap_columns(k, p);
                perm.swap(k, p);
            }
        }
        let d = a[(k, k)];
        if !(d > 0.0) {
            return Err(DeimError::NotPositiveDefinite { pivot: k + 1 });
        }
        let lkk = d.sqrt();
        a[(k, k)] = lkk;
        for i in k + 1..m {
            a[(i, k)] /= lkk;
        }
        let col: Vec<f64> = (k + 1..m).map(|i| a[(i, k)]).collect();
        // The whole trailing block is updated so that later symmetric
        // row/column swaps read current values.
        for (jj, j) in (k + 1..m).enumerate() {
            let ljk = col[jj];
            if ljk == 0.0 {
                continue;
            }
            let mut dst = a.column_mut(j);
            for (ii, i) in (k + 1..m).enumerate() {
                dst[i] -= col[ii] * ljk;
            }
        }
    }
    for j in 0..m {
        for i in 0..j {
            a[(i, j)] = 0.0;
        }
    }
    Ok(CholeskyFactor { l: a, perm })
}
