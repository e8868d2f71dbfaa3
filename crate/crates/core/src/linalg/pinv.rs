use super::{thin_svd, Matrix};
use crate::error::{DeimError, Result};

/// Relative singular-value cutoff for pseudoinverses.
pub const PINV_RCOND: f64 = 1e-12;

/// Moore–Penrose pseudoinverse built from a thin SVD, keeping singular values
/// above `rcond * sigma_max`.
#[derive(Debug, Clone)]
pub struct PseudoInverse {
    pub pinv: Matrix,
    /// All singular values of the original matrix, non-increasing.
    pub sigma: Vec<f64>,
    pub rank: usize,
}

impl PseudoInverse {
    /// `||A^+||_2 = 1 / sigma_rank`.
    pub fn norm(&self) -> f64 {
        1.0 / self.sigma[self.rank - 1]
    }

    pub fn apply(&self, rhs: &Matrix) -> Matrix {
        &self.pinv * rhs
    }
}

pub fn pseudo_inverse(a: &Matrix, rcond: f64) -> Result<PseudoInverse> {
    let svd = thin_svd(a)?;
    let smax = svd.sigma[0];
    let rank = svd.sigma.iter().filter(|&&s| s > rcond * smax).count();
    if rank == 0 {
        return Err(DeimError::RankDeficient {
            sigma_min: *svd.sigma.last().unwrap(),
            sigma_max: smax,
        });
    }
    let mut v = svd.v.columns(0, rank).into_owned();
    for j in 0..rank {
        v.column_mut(j).scale_mut(1.0 / svd.sigma[j]);
    }
    let pinv = v * svd.u.columns(0, rank).transpose();
    Ok(PseudoInverse {
        pinv,
        sigma: svd.sigma,
        rank,
    })
}

/// Least-squares solution `A^+ B` for `A` with full column rank.
pub fn pinv_apply(a: &Matrix, rhs: &Matrix) -> Result<Matrix> {
    if rhs.nrows() != a.nrows() {
        return Err(DeimError::DimensionMismatch {
            expected: a.nrows(),
            found: rhs.nrows(),
        });
    }
    if a.ncols() > a.nrows() {
        return Err(DeimError::InvalidArgument(format!(
            "least-squares solve needs rows >= cols, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let p = pseudo_inverse(a, PINV_RCOND)?;
    if p.rank < a.ncols() {
        return Err(DeimError::RankDeficient {
            sigma_min: *p.sigma.last().unwrap(),
            sigma_max: p.sigma[0],
        });
    }
    Ok(p.apply(rhs))
}
