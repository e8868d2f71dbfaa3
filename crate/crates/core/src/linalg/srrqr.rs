//! Strong rank-revealing QR (Gu–Eisenstat, Algorithm 4).
//!
//! Starting from Businger–Golub pivoting, columns of the leading block are
//! exchanged with trailing columns while some exchange would grow
//! `|det R11|` by a factor larger than `eta`. On exit
//!
//! ```text
//! |(R11^{-1} R12)_ij|^2 + (gamma_j(R22) / omega_i(R11))^2 <= eta^2
//! ```
//!
//! for every pair, where `gamma_j` is the norm of column `j` of `R22` and
//! `1 / omega_i` the norm of row `i` of `R11^{-1}`.

use super::qr::{householder, PivotedQr};
use super::triangular::solve_left_in_place;
use super::{ensure_finite, select_columns, singular_values, Matrix, Triangle};
use crate::error::{DeimError, Result};

#[derive(Debug, Clone)]
pub struct SrrqrOptions {
    pub eta: f64,
    /// Maximum number of exchanges. `None` means `ceil(10 n log2 n)`.
    pub swap_cap: Option<usize>,
    /// The wide case updates `R11^{-1} R12` in place and recomputes it from
    /// scratch after this many exchanges.
    pub refresh_every: usize,
}

impl Default for SrrqrOptions {
    fn default() -> Self {
        Self {
            eta: 2.0,
            swap_cap: None,
            refresh_every: 50,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SrrqrResult {
    pub qr: PivotedQr,
    pub target_rank: usize,
    pub eta: f64,
    pub swap_count: usize,
}

impl SrrqrResult {
    pub fn perm(&self) -> &[usize] {
        &self.qr.perm
    }

    pub fn r11(&self) -> Matrix {
        let k = self.target_rank;
        self.qr.r.view((0, 0), (k, k)).into_owned()
    }

    /// `max |R11^{-1} R12|`, recomputed by an explicit triangular solve.
    pub fn certificate(&self) -> f64 {
        let k = self.target_rank;
        let n = self.qr.r.ncols();
        if k == n {
            return 0.0;
        }
        let mut b = self.qr.r.view((0, k), (k, n - k)).into_owned();
        solve_left_in_place(&self.r11(), &mut b, Triangle::Upper, false);
        b.amax()
    }

    pub fn sigma_min_r11(&self) -> Result<f64> {
        Ok(*singular_values(&self.r11())?.last().unwrap())
    }

    /// `sqrt(1 + eta^2 k (n - k))`.
    pub fn bound(&self) -> f64 {
        srrqr_bound(self.target_rank, self.qr.r.ncols(), self.eta)
    }
}

/// `sqrt(1 + eta^2 k (n - k))`, the factor in the singular-value sandwich.
pub fn srrqr_bound(k: usize, n: usize, eta: f64) -> f64 {
    (1.0 + eta * eta * k as f64 * (n - k) as f64).sqrt()
}

pub fn srrqr(a: &Matrix, target_rank: usize, eta: f64) -> Result<SrrqrResult> {
    srrqr_with(
        a,
        target_rank,
        &SrrqrOptions {
            eta,
            ..Default::default()
        },
    )
}

pub fn srrqr_with(a: &Matrix, k: usize, opts: &SrrqrOptions) -> Result<SrrqrResult> {
    ensure_finite(a)?;
    let (m, n) = a.shape();
    if k == 0 || k > m.min(n) {
        return Err(DeimError::InvalidArgument(format!(
            "target rank {k} must lie in 1..={}",
            m.min(n)
        )));
    }
    let eta = opts.eta;
    if !(eta >= 1.0) || !eta.is_finite() {
        return Err(DeimError::InvalidArgument(format!("eta must be >= 1, got {eta}")));
    }

    let initial = householder(a.clone(), true);
    let r00 = initial.r[(0, 0)].abs();
    let rkk = initial.r[(k - 1, k - 1)].abs();
    if rkk <= r00 * m.max(n) as f64 * f64::EPSILON {
        return Err(DeimError::RankDeficient {
            sigma_min: rkk,
            sigma_max: r00,
        });
    }
    if k == n {
        return Ok(SrrqrResult {
            qr: initial,
            target_rank: k,
            eta,
            swap_count: 0,
        });
    }

    let cap = opts.swap_cap.unwrap_or_else(|| default_cap(n));
    let mut perm = initial.perm.clone();
    let mut swaps = 0usize;
    let mut current = initial;

    loop {
        let state = ExchangeState::from_factor(&current.r, k);
        let Some((i, j, _)) = state.worst(eta) else {
            break;
        };
        if swaps >= cap {
            return Err(DeimError::SwapCapExceeded { cap });
        }
        perm.swap(i, k + j);
        swaps += 1;

        if k == m {
            // Wide case: R22 is empty, so only R11^{-1} R12 matters and it
            // can be updated in place by the exchange formulas.
            let mut b = state.b;
            exchange_update(&mut b, i, j);
            let mut since_refresh = 1;
            while since_refresh < opts.refresh_every.max(1) {
                let Some((i, j)) = worst_entry(&b, eta) else {
                    break;
                };
                if swaps >= cap {
                    return Err(DeimError::SwapCapExceeded { cap });
                }
                perm.swap(i, k + j);
                swaps += 1;
                since_refresh += 1;
                exchange_update(&mut b, i, j);
            }
        }
        // Fresh factors of the permuted matrix; the next pass re-checks the
        // certificate on them so drift in the updates cannot leak out.
        current = householder(select_columns(a, &perm), false);
        current.perm = perm.clone();
    }

    log::debug!("srrqr: {swaps} exchanges for k = {k}, n = {n}, eta = {eta}");
    Ok(SrrqrResult {
        qr: current,
        target_rank: k,
        eta,
        swap_count: swaps,
    })
}

fn default_cap(n: usize) -> usize {
    let n = n as f64;
    ((10.0 * n * n.log2()).ceil() as usize).max(1)
}

struct ExchangeState {
    /// `R11^{-1} R12`.
    b: Matrix,
    /// Column norms of `R22`.
    gamma: Vec<f64>,
    /// Row norms of `R11^{-1}`.
    inv_row_norms: Vec<f64>,
}

impl ExchangeState {
    fn from_factor(r: &Matrix, k: usize) -> Self {
        let (rows, n) = r.shape();
        let r11 = r.view((0, 0), (k, k)).into_owned();
        let mut b = r.view((0, k), (k, n - k)).into_owned();
        solve_left_in_place(&r11, &mut b, Triangle::Upper, false);
        let gamma = (0..n - k)
            .map(|j| {
                if rows > k {
                    r.view((k, k + j), (rows - k, 1)).norm()
                } else {
                    0.0
                }
            })
            .collect();
        let mut inv = Matrix::identity(k, k);
        solve_left_in_place(&r11, &mut inv, Triangle::Upper, false);
        let inv_row_norms = (0..k).map(|i| inv.row(i).norm()).collect();
        Self {
            b,
            gamma,
            inv_row_norms,
        }
    }

    /// The exchange `(i, j)` with the largest growth factor, if it exceeds `eta`.
    fn worst(&self, eta: f64) -> Option<(usize, usize, f64)> {
        let mut best: Option<(usize, usize, f64)> = None;
        for j in 0..self.b.ncols() {
            for i in 0..self.b.nrows() {
                let g = self.gamma[j] * self.inv_row_norms[i];
                let rho = self.b[(i, j)].hypot(g);
                if rho > eta && best.is_none_or(|(_, _, r)| rho > r) {
                    best = Some((i, j, rho));
                }
            }
        }
        best
    }
}

fn worst_entry(b: &Matrix, eta: f64) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize, f64)> = None;
    for j in 0..b.ncols() {
        for i in 0..b.nrows() {
            let v = b[(i, j)].abs();
            if v > eta && best.is_none_or(|(_, _, r)| v > r) {
                best = Some((i, j, v));
            }
        }
    }
    best.map(|(i, j, _)| (i, j))
}

/// Updates `B = A1^{-1} A2` after exchanging column `i` of `A1` with column
/// `j` of `A2`.
fn exchange_update(b: &mut Matrix, i: usize, j: usize) {
    let (k, w) = b.shape();
    let p = b[(i, j)];
    let bj: Vec<f64> = (0..k).map(|t| b[(t, j)]).collect();
    for l in 0..w {
        if l == j {
            continue;
        }
        let bil = b[(i, l)] / p;
        for t in 0..k {
            if t == i {
                b[(t, l)] = bil;
            } else {
                b[(t, l)] -= bj[t] * bil;
            }
        }
    }
    for t in 0..k {
        b[(t, j)] = if t == i { 1.0 / p } else { -bj[t] / p };
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::qr_column_pivoted;

    #[test]
    fn identity_needs_no_exchange() {
        let res = srrqr(&Matrix::identity(4, 4), 2, 2.0).unwrap();
        assert_eq!(res.swap_count, 0);
        assert_eq!(res.certificate(), 0.0);
        let chosen: Vec<usize> = res.perm()[..2].to_vec();
        assert!(chosen.iter().all(|&c| c < 4));
    }

    #[test]
    fn wide_single_row() {
        let a = Matrix::from_row_slice(1, 3, &[0.6, 0.8, 0.0]);
        let res = srrqr(&a, 1, 2.0).unwrap();
        assert_eq!(res.perm()[0], 1);
        assert!((res.r11()[(0, 0)].abs() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn exchange_update_matches_recomputation() {
        let k = 4;
        let n = 9;
        let a = Matrix::from_fn(k, n, |i, j| ((i + 1) as f64 * (j + 2) as f64 * 0.7 + (i * i) as f64).sin());
        let b_of = |perm: &[usize]| {
            let f = householder(select_columns(&a, perm), false);
            let mut b = f.r.view((0, k), (k, n - k)).into_owned();
            solve_left_in_place(&f.r.view((0, 0), (k, k)).into_owned(), &mut b, Triangle::Upper, false);
            b
        };
        let mut perm: Vec<usize> = (0..n).collect();
        let mut b = b_of(&perm);
        for (i, j) in [(1, 2), (3, 0), (0, 4)] {
            exchange_update(&mut b, i, j);
            perm.swap(i, k + j);
            assert!((&b - b_of(&perm)).amax() < 1e-10);
        }
    }

    #[test]
    fn matches_pivoted_qr_when_already_strong() {
        let a = Matrix::from_fn(3, 8, |i, j| if i == j { 3.0 - i as f64 } else { 0.01 * j as f64 });
        let qr = qr_column_pivoted(&a).unwrap();
        let res = srrqr(&a, 3, 2.0).unwrap();
        assert_eq!(res.swap_count, 0);
        assert_eq!(res.perm(), &qr.perm[..]);
    }

    #[test]
    fn rank_deficiency_is_an_error() {
        let a = Matrix::from_fn(2, 5, |_, j| j as f64);
        assert!(matches!(srrqr(&a, 2, 2.0), Err(DeimError::RankDeficient { .. })));
    }

    #[test]
    fn rejects_small_eta() {
        assert!(srrqr(&Matrix::identity(2, 2), 1, 0.5).is_err());
    }
}
