//! Canonical structure of an oblique projector.
//!
//! For `D = X (Y^T X)^+ Y^T` with orthonormal `X` (range) and `Y` (the
//! sampling directions), the principal angles `psi_i` between the two
//! subspaces determine everything: `D` is the identity on the `ell`
//! directions the subspaces share, acts as `[[1, 0], [tan psi_i, 0]]` on one
//! plane per nonzero angle and vanishes elsewhere. Hence
//! `||D||_2 = ||I - D||_2 = 1 / cos psi_max`.
//!
//! For the weighted variants the analysis runs on `L^T D L^{-T}`, so the
//! Euclidean angles reported here are the ones that govern `||D||_W`.

use std::f64::consts::FRAC_PI_2;

use super::DeimProjector;
use crate::error::{DeimError, Result};
use crate::linalg::{principal_angles, qr_column_pivoted, thin_svd, Matrix, Vector};

/// Angles at or below this many radians count as zero.
pub const ANGLE_TOL: f64 = 1e-8;

/// The canonical basis is only materialized up to this dimension.
pub const CANONICAL_BASIS_LIMIT: usize = 500;

#[derive(Debug, Clone)]
pub struct CanonicalStructure {
    /// Dimension of the intersection of the two subspaces.
    pub ell: usize,
    /// `rank(D) - ell`.
    pub p: usize,
    /// The `p` nonzero angles, non-decreasing.
    pub angles: Vec<f64>,
    /// All `min(s, r)` principal angles, zeros included.
    pub all_angles: Vec<f64>,
    /// `1 / cos psi_max`, or 1 when `p = 0`.
    pub norm_d: f64,
    /// Some angle lies within `ANGLE_TOL` of `pi/2`, so `D` is close to
    /// unbounded.
    pub near_singular: bool,
    /// Orthogonal `Z` with `Z^T D~ Z` in canonical block form, when requested.
    pub z_basis: Option<Matrix>,
}

impl CanonicalStructure {
    /// `tan psi_max`, the norm of the tangent block.
    pub fn tan_norm(&self) -> f64 {
        self.angles.last().map_or(0.0, |a| a.tan())
    }

    /// `sqrt(1 + ||Tan Psi||^2)`, equal to `norm_d` in exact arithmetic.
    pub fn cs_norm(&self) -> f64 {
        let t = self.tan_norm();
        (1.0 + t * t).sqrt()
    }

    /// The `2 x 2` block `[[1, 0], [tan psi_i, 0]]` for the `i`-th nonzero angle.
    pub fn block(&self, i: usize) -> Matrix {
        Matrix::from_row_slice(2, 2, &[1.0, 0.0, self.angles[i].tan(), 0.0])
    }
}

pub fn canonical_analysis(d: &DeimProjector) -> Result<CanonicalStructure> {
    analyse(d, false)
}

/// As [`canonical_analysis`], also building the canonical basis `Z`.
/// Limited to `m <= 500`.
pub fn canonical_analysis_with_basis(d: &DeimProjector) -> Result<CanonicalStructure> {
    if d.dim() > CANONICAL_BASIS_LIMIT {
        return Err(DeimError::InvalidArgument(format!(
            "canonical basis is limited to m <= {CANONICAL_BASIS_LIMIT}, got m = {}",
            d.dim()
        )));
    }
    analyse(d, true)
}

fn analyse(d: &DeimProjector, with_basis: bool) -> Result<CanonicalStructure> {
    let (x, y) = d.transformed_pair()?;
    let all_angles = principal_angles(&x, &y)?;
    let cross = y.tr_mul(&x);
    let svd = thin_svd(&cross)?;
    let k = all_angles.len();
    let ell = all_angles.iter().filter(|&&a| a <= ANGLE_TOL).count();
    let p = k - ell;
    let near_singular = all_angles.iter().any(|&a| a >= FRAC_PI_2 - ANGLE_TOL);
    let norm_d = if p == 0 {
        1.0
    } else {
        1.0 / svd.sigma[k - 1]
    };
    let z_basis = if with_basis {
        Some(wedin_basis(&x, &y, &svd.u, &svd.v, &svd.sigma[..k], ell)?)
    } else {
        None
    };
    Ok(CanonicalStructure {
        ell,
        p,
        angles: all_angles[ell..].to_vec(),
        all_angles,
        norm_d,
        near_singular,
        z_basis,
    })
}

/// Principal vectors `x_i = X gamma_i`, `y_i = Y omega_i` from the SVD
/// `Y^T X = Omega C Gamma^T`. Shared directions contribute `x_i`; every
/// nonzero angle contributes the pair `y_i`, `(x_i - cos psi_i y_i) / sin psi_i`;
/// an orthonormal completion follows, on which `D~` vanishes.
fn wedin_basis(
    x: &Matrix,
    y: &Matrix,
    omega: &Matrix,
    gamma: &Matrix,
    cosines: &[f64],
    ell: usize,
) -> Result<Matrix> {
    let m = x.nrows();
    let mut cols: Vec<Vector> = Vec::new();
    for i in 0..cosines.len() {
        let xi = x * gamma.column(i);
        let yi = y * omega.column(i);
        if i < ell {
            cols.push(xi);
        } else {
            let mut z2 = &xi - &yi * cosines[i];
            let n = z2.norm();
            if n > 0.0 {
                z2 /= n;
            }
            cols.push(yi);
            cols.push(z2);
        }
    }
    let k = cols.len();
    let mut z = Matrix::zeros(m, m);
    for (j, c) in cols.iter().enumerate() {
        z.set_column(j, c);
    }
    if k < m {
        let head = z.columns(0, k).into_owned();
        let mut rest = Matrix::identity(m, m);
        for _pass in 0..2 {
            let c = head.tr_mul(&rest);
            rest -= &head * c;
        }
        let q = qr_column_pivoted(&rest)?.q;
        z.columns_mut(k, m - k).copy_from(&q.columns(0, m - k));
    }
    Ok(z)
}
