use super::{ensure_finite, Matrix};
use crate::error::Result;

/// `A[:, perm] = Q R` with `Q` having orthonormal columns.
///
/// `perm[j]` is the original index of the column placed at position `j`.
/// The diagonal of `R` is non-negative.
#[derive(Debug, Clone)]
pub struct PivotedQr {
    pub q: Matrix,
    pub r: Matrix,
    pub perm: Vec<usize>,
}

impl PivotedQr {
    /// Number of Householder steps, `min(rows, cols)`.
    pub fn steps(&self) -> usize {
        self.q.ncols()
    }

    /// `|r_jj|` in pivot order.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.steps()).map(|j| self.r[(j, j)].abs()).collect()
    }
}

/// Businger–Golub QR with column pivoting.
///
/// At each step the remaining column of largest norm is moved to the front.
/// Exact ties go to the column with the lowest original index.
pub fn qr_column_pivoted(a: &Matrix) -> Result<PivotedQr> {
    ensure_finite(a)?;
    Ok(householder(a.clone(), true))
}

/// Unpivoted thin Householder QR, `A = Q R` with non-negative `diag(R)`.
pub fn householder_qr(a: &Matrix) -> Result<PivotedQr> {
    ensure_finite(a)?;
    Ok(householder(a.clone(), false))
}

pub(crate) fn householder(mut a: Matrix, pivot: bool) -> PivotedQr {
    let (m, n) = a.shape();
    let k = m.min(n);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut taus = vec![0.0; k];

    // Partial column norms and the reference values used to detect when
    // downdating has lost too many digits (LAPACK xLAQP2 strategy).
    let mut norms: Vec<f64> = (0..n).map(|j| a.column(j).norm()).collect();
    let mut ref_norms = norms.clone();
    let tol = f64::EPSILON.sqrt();

    for j in 0..k {
        if pivot {
            let mut p = j;
            for c in j + 1..n {
                if norms[c] > norms[p] || (norms[c] == norms[p] && perm[c] < perm[p]) {
                    p = c;
                }
            }
            if p != j {
                a.swap_columns(j, p);
                perm.swap(j, p);
                norms.swap(j, p);
                ref_norms.swap(j, p);
            }
        }

        let tau = make_reflector(&mut a, j);
        taus[j] = tau;
        if tau != 0.0 {
            apply_reflector_from_column(&mut a, j, tau, j + 1..n);
        }

        if pivot {
            for c in j + 1..n {
                if norms[c] == 0.0 {
                    continue;
                }
                let t = (a[(j, c)].abs() / norms[c]).powi(2);
                let t = (1.0 - t).max(0.0);
                let t2 = t * (norms[c] / ref_norms[c]).powi(2);
                if t2 <= tol {
                    let nrm = if j + 1 < m {
                        a.view((j + 1, c), (m - j - 1, 1)).norm()
                    } else {
                        0.0
                    };
                    norms[c] = nrm;
                    ref_norms[c] = nrm;
                } else {
                    norms[c] *= t.sqrt();
                }
            }
        }
    }

    // Accumulate the thin Q backwards from the stored reflectors.
    let mut q = Matrix::zeros(m, k);
    for j in 0..k {
        q[(j, j)] = 1.0;
    }
    for j in (0..k).rev() {
        let tau = taus[j];
        if tau == 0.0 {
            continue;
        }
        let v: Vec<f64> = (j + 1..m).map(|i| a[(i, j)]).collect();
        let data = q.as_mut_slice();
        for c in j..k {
            apply_reflector(&v, tau, &mut data[c * m + j..(c + 1) * m]);
        }
    }

    let mut r = Matrix::zeros(k, n);
    for c in 0..n {
        for i in 0..=c.min(k - 1) {
            r[(i, c)] = a[(i, c)];
        }
    }
    for j in 0..k {
        if r[(j, j)] < 0.0 {
            r.row_mut(j).neg_mut();
            q.column_mut(j).neg_mut();
        }
    }

    PivotedQr { q, r, perm }
}

/// Turns column `j` (rows `j..`) into a Householder vector with implicit unit
/// head, writing the resulting diagonal entry into `a[(j, j)]`. Returns `tau`.
fn make_reflector(a: &mut Matrix, j: usize) -> f64 {
    let m = a.nrows();
    let alpha = a[(j, j)];
    let tail: f64 = if j + 1 < m {
        a.view((j + 1, j), (m - j - 1, 1)).norm()
    } else {
        0.0
    };
    if tail == 0.0 {
        return 0.0;
    }
    let norm = alpha.hypot(tail);
    let beta = if alpha >= 0.0 { -norm } else { norm };
    let scale = 1.0 / (alpha - beta);
    for i in j + 1..m {
        a[(i, j)] *= scale;
    }
    a[(j, j)] = beta;
    (beta - alpha) / beta
}

fn apply_reflector_from_column(a: &mut Matrix, j: usize, tau: f64, cols: std::ops::Range<usize>) {
    let m = a.nrows();
    let v: Vec<f64> = (j + 1..m).map(|i| a[(i, j)]).collect();
    let data = a.as_mut_slice();
    for c in cols {
        let col = &mut data[c * m + j..(c + 1) * m];
        apply_reflector(&v, tau, col);
    }
}

/// `x <- (I - tau [1; v][1; v]^T) x`.
#[inline]
pub(crate) fn apply_reflector(v: &[f64], tau: f64, x: &mut [f64]) {
    let (head, tail) = x.split_first_mut().expect("non-empty reflector target");
    let mut s = *head;
    for (vi, xi) in v.iter().zip(tail.iter()) {
        s += vi * xi;
    }
    s *= tau;
    *head -= s;
    for (vi, xi) in v.iter().zip(tail.iter_mut()) {
        *xi -= s * vi;
    }
}
