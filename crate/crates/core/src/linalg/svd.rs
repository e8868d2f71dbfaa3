use super::qr::householder;
use super::{argmax_abs, ensure_finite, Matrix};
use crate::error::{DeimError, Result};

/// `A = U diag(sigma) V^T` with `k = min(rows, cols)` columns in `U` and `V`.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub u: Matrix,
    pub sigma: Vec<f64>,
    pub v: Matrix,
}

impl ThinSvd {
    pub fn reconstruct(&self) -> Matrix {
        let mut us = self.u.clone();
        for (j, s) in self.sigma.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        us * self.v.transpose()
    }
}

const MAX_SWEEPS: usize = 10_000;

fn square_svd(r: &Matrix, vectors: bool) -> Result<nalgebra::SVD<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    r.clone()
        .try_svd(vectors, vectors, f64::EPSILON, MAX_SWEEPS)
        .ok_or(DeimError::SvdFailed)
}

/// Thin SVD with singular values in non-increasing order.
///
/// A column-pivoted Householder QR first reduces the long dimension, which
/// also moves zero columns to the back; the small square factor goes
/// through bidiagonalization and implicit QR iteration. Each
/// left singular vector is signed so that its largest-magnitude entry is
/// positive (lowest index on ties), and `V` is flipped to match.
pub fn thin_svd(a: &Matrix) -> Result<ThinSvd> {
    ensure_finite(a)?;
    if a.nrows() >= a.ncols() {
        tall_svd(a)
    } else {
        let t = tall_svd(&a.transpose())?;
        let mut out = ThinSvd {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        };
        fix_signs(&mut out);
        Ok(out)
    }
}

fn tall_svd(a: &Matrix) -> Result<ThinSvd> {
    let n = a.ncols();
    let qr = householder(a.clone(), true);
    let svd = square_svd(&qr.r, true)?;
    let ur = svd.u.ok_or(DeimError::SvdFailed)?;
    let vt = svd.v_t.ok_or(DeimError::SvdFailed)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        svd.singular_values[j]
            .partial_cmp(&svd.singular_values[i])
            .unwrap()
            .then(i.cmp(&j))
    });
    let sigma: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let ur = Matrix::from_fn(n, n, |i, j| ur[(i, order[j])]);
    // A P = Q R, so V = P V_R: row `perm[i]` of V is row `i` of V_R.
    let mut v = Matrix::zeros(n, n);
    for (i, &p) in qr.perm.iter().enumerate() {
        for j in 0..n {
            v[(p, j)] = vt[(order[j], i)];
        }
    }
    let mut out = ThinSvd {
        u: &qr.q * ur,
        sigma,
        v,
    };
    fix_signs(&mut out);
    Ok(out)
}

fn fix_signs(svd: &mut ThinSvd) {
    for j in 0..svd.u.ncols() {
        let col = svd.u.column(j);
        if let Some(i) = argmax_abs(col.iter().copied()) {
            if col[i] < 0.0 {
                svd.u.column_mut(j).neg_mut();
                svd.v.column_mut(j).neg_mut();
            }
        }
    }
}

/// Singular values only, non-increasing.
pub fn singular_values(a: &Matrix) -> Result<Vec<f64>> {
    ensure_finite(a)?;
    let tall = if a.nrows() >= a.ncols() {
        a.clone()
    } else {
        a.transpose()
    };
    let r = householder(tall, true).r;
    let sv = square_svd(&r, false)?.singular_values;
    let mut s: Vec<f64> = sv.iter().copied().collect();
    s.sort_by(|x, y| y.partial_cmp(x).unwrap());
    Ok(s)
}

/// `||A||_2`.
pub fn spectral_norm(a: &Matrix) -> Result<f64> {
    Ok(singular_values(a)?[0])
}
