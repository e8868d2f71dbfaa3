//! POD bases that are orthonormal in the `W` inner product.
//!
//! The default route factors `W = L L^T`, takes the thin SVD
//! `L^T Y = U Sigma V^T` and returns `U_hat = L^{-T} U_r`. Then
//! `U_hat^T W U_hat = I` and `L^T U_hat = U_r`. The alternative
//! [`pod_basis_gsvd`] orthonormalizes the snapshots in `W` first and never
//! touches `L` during the orthogonalization.

use crate::error::{DeimError, Result};
use crate::linalg::{ensure_finite, thin_svd, Matrix, Vector};
use crate::weighting::WeightOperator;

/// Singular values below `RANK_RTOL * sigma_1` count as zero.
pub const RANK_RTOL: f64 = 1e-13;

/// `U_hat` is re-orthogonalized when `||U_hat^T W U_hat - I||_F` exceeds this.
pub const W_ORTHONORMAL_TOL: f64 = 1e-8;

/// Gram–Schmidt stops when a column's `W`-norm falls below this fraction of
/// `||Y||_{W,F}`.
pub const BREAKDOWN_RTOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RankSpec {
    Explicit(usize),
    /// Smallest `r` whose relative tail `sqrt(sum_{j>r} s_j^2 / sum_j s_j^2)`
    /// is at most the given tolerance.
    Energy(f64),
}

#[derive(Debug, Clone, Default)]
pub struct PodOptions {
    /// Subtract the snapshot mean before the decomposition. Off by default.
    pub center: bool,
}

#[derive(Debug, Clone)]
pub struct PodBasis {
    u_hat: Matrix,
    u_euclid: Matrix,
    /// Left vectors of `L^T Y` up to the numerical rank.
    u_all: Matrix,
    v_all: Matrix,
    sigma: Vec<f64>,
    rank: usize,
    numerical_rank: usize,
    weight: WeightOperator,
    mean: Option<Vector>,
}

impl PodBasis {
    /// `U_hat`, `m x r`, `W`-orthonormal.
    pub fn u_hat(&self) -> &Matrix {
        &self.u_hat
    }

    /// `U_r = L^T U_hat`, `m x r`, orthonormal.
    pub fn u_euclid(&self) -> &Matrix {
        &self.u_euclid
    }

    /// All singular values of `L^T Y`, retained and discarded.
    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn numerical_rank(&self) -> usize {
        self.numerical_rank
    }

    pub fn dim(&self) -> usize {
        self.u_hat.nrows()
    }

    pub fn weight(&self) -> &WeightOperator {
        &self.weight
    }

    /// Right singular vectors for the retained modes, `n x r`.
    pub fn right_vectors(&self) -> Matrix {
        self.v_all.columns(0, self.rank).into_owned()
    }

    pub fn mean(&self) -> Option<&Vector> {
        self.mean.as_ref()
    }

    /// The same decomposition truncated to `r` modes.
    pub fn truncate(&self, r: usize) -> Result<PodBasis> {
        if r == 0 || r > self.numerical_rank {
            return Err(DeimError::RankTooLarge {
                requested: r,
                rank: self.numerical_rank,
                sigma: self.sigma.clone(),
            });
        }
        let u_r = self.u_all.columns(0, r).into_owned();
        let (u_hat, u_euclid) = weighted_from_euclid(&self.weight, u_r)?;
        Ok(PodBasis {
            u_hat,
            u_euclid,
            rank: r,
            ..self.clone()
        })
    }

    /// `P f = U_hat U_hat^T W f`.
    pub fn project(&self, f: &Vector) -> Result<Vector> {
        let wf = self.weight.mul_vec(f)?;
        Ok(&self.u_hat * self.u_hat.tr_mul(&wf))
    }

    /// Column-wise projection of a matrix.
    pub fn project_matrix(&self, f: &Matrix) -> Result<Matrix> {
        let wf = self.weight.mul(f)?;
        Ok(&self.u_hat * self.u_hat.tr_mul(&wf))
    }
}

/// `U_hat = L^{-T} U_r`, re-orthogonalized in `W` when roundoff in the
/// triangular solve has cost orthonormality.
fn weighted_from_euclid(w: &WeightOperator, u_r: Matrix) -> Result<(Matrix, Matrix)> {
    let u_hat = w.lt_solve(&u_r)?;
    let defect = w.w_orthonormality_defect(&u_hat)?;
    if defect <= W_ORTHONORMAL_TOL {
        return Ok((u_hat, u_r));
    }
    log::debug!("re-orthogonalizing POD basis in W (defect {defect:.3e})");
    let (q, _) = weighted_qr(&u_hat, w)?;
    let u_euclid = w.lt_mul(&q)?;
    Ok((q, u_euclid))
}

fn check_snapshots(y: &Matrix, w: &WeightOperator) -> Result<()> {
    ensure_finite(y)?;
    if y.nrows() != w.dim() {
        return Err(DeimError::DimensionMismatch {
            expected: w.dim(),
            found: y.nrows(),
        });
    }
    Ok(())
}

fn centered(y: &Matrix, opts: &PodOptions) -> (Matrix, Option<Vector>) {
    if !opts.center {
        return (y.clone(), None);
    }
    let mean = y.column_mean();
    let mut c = y.clone();
    for mut col in c.column_iter_mut() {
        col -= &mean;
    }
    (c, Some(mean))
}

fn numerical_rank(sigma: &[f64]) -> usize {
    let s1 = sigma.first().copied().unwrap_or(0.0);
    if s1 <= 0.0 {
        return 0;
    }
    sigma.iter().filter(|&&s| s > RANK_RTOL * s1).count()
}

fn resolve_rank(spec: RankSpec, sigma: &[f64], rank: usize) -> Result<usize> {
    let r = match spec {
        RankSpec::Explicit(r) => r,
        RankSpec::Energy(tau) => rank_select(sigma, tau)?.min(rank),
    };
    if r == 0 || r > rank {
        return Err(DeimError::RankTooLarge {
            requested: r,
            rank,
            sigma: sigma.to_vec(),
        });
    }
    Ok(r)
}

/// Weighted POD through the SVD of `L^T Y`.
pub fn pod_basis(y: &Matrix, w: &WeightOperator, spec: RankSpec) -> Result<PodBasis> {
    pod_basis_with(y, w, spec, &PodOptions::default())
}

pub fn pod_basis_with(
    y: &Matrix,
    w: &WeightOperator,
    spec: RankSpec,
    opts: &PodOptions,
) -> Result<PodBasis> {
    check_snapshots(y, w)?;
    let (y, mean) = centered(y, opts);
    let svd = thin_svd(&w.lt_mul(&y)?)?;
    let numerical_rank = numerical_rank(&svd.sigma);
    let r = resolve_rank(spec, &svd.sigma, numerical_rank)?;
    let u_all = svd.u.columns(0, numerical_rank).into_owned();
    let v_all = svd.v.columns(0, numerical_rank).into_owned();
    let (u_hat, u_euclid) = weighted_from_euclid(w, u_all.columns(0, r).into_owned())?;
    Ok(PodBasis {
        u_hat,
        u_euclid,
        u_all,
        v_all,
        sigma: svd.sigma,
        rank: r,
        numerical_rank,
        weight: w.clone(),
        mean,
    })
}

/// Weighted POD through a `W`-orthonormal QR `Y = Q_Y R_Y` followed by the
/// SVD of `R_Y`: `U_hat = Q_Y U_R`.
///
/// The columns of `Y` must be numerically independent in `W`.
pub fn pod_basis_gsvd(y: &Matrix, w: &WeightOperator, spec: RankSpec) -> Result<PodBasis> {
    check_snapshots(y, w)?;
    let (q, r) = weighted_qr(y, w)?;
    let svd = thin_svd(&r)?;
    let numerical_rank = numerical_rank(&svd.sigma);
    let rank = resolve_rank(spec, &svd.sigma, numerical_rank)?;
    let mut u_hat_all = &q * svd.u.columns(0, numerical_rank);
    let mut u_all = w.lt_mul(&u_hat_all)?;
    let mut v_all = svd.v.columns(0, numerical_rank).into_owned();
    // Same sign convention as the factor route, applied to U_r = L^T U_hat.
    for j in 0..numerical_rank {
        let col = u_all.column(j);
        let i = crate::linalg::argmax_abs(col.iter().copied()).unwrap_or(0);
        if col[i] < 0.0 {
            u_all.column_mut(j).neg_mut();
            u_hat_all.column_mut(j).neg_mut();
            v_all.column_mut(j).neg_mut();
        }
    }
    Ok(PodBasis {
        u_hat: u_hat_all.columns(0, rank).into_owned(),
        u_euclid: u_all.columns(0, rank).into_owned(),
        u_all,
        v_all,
        sigma: svd.sigma,
        rank,
        numerical_rank,
        weight: w.clone(),
        mean: None,
    })
}

/// `W`-orthonormal QR by modified Gram–Schmidt with one full
/// re-orthogonalization pass: `Y = Q R`, `Q^T W Q = I`.
pub fn weighted_qr(y: &Matrix, w: &WeightOperator) -> Result<(Matrix, Matrix)> {
    check_snapshots(y, w)?;
    let (m, n) = y.shape();
    let total = w.lt_mul(y)?.norm();
    let mut q = Matrix::zeros(m, n);
    let mut wq = Matrix::zeros(m, n);
    let mut r = Matrix::zeros(n, n);
    for j in 0..n {
        let mut v = y.column(j).into_owned();
        for _pass in 0..2 {
            for i in 0..j {
                let c = wq.column(i).dot(&v);
                v.axpy(-c, &q.column(i), 1.0);
                r[(i, j)] += c;
            }
        }
        let nrm = w.w_norm(&v)?;
        if !(nrm > BREAKDOWN_RTOL * total) {
            return Err(DeimError::Breakdown {
                column: j + 1,
                norm: nrm,
            });
        }
        r[(j, j)] = nrm;
        v /= nrm;
        let wv = w.mul_vec(&v)?;
        q.set_column(j, &v);
        wq.set_column(j, &wv);
    }
    Ok((q, r))
}

/// `P_U f = U_hat U_hat^T W f`.
pub fn pod_project(basis: &PodBasis, f: &Vector) -> Result<Vector> {
    basis.project(f)
}

/// Smallest `r >= 1` with `sqrt(sum_{j>r} s_j^2 / sum_j s_j^2) <= tau`.
pub fn rank_select(sigma: &[f64], tau: f64) -> Result<usize> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(DeimError::InvalidArgument(format!(
            "energy tolerance must lie in (0, 1), got {tau}"
        )));
    }
    let total: f64 = sigma.iter().map(|s| s * s).sum();
    if !(total > 0.0) {
        return Err(DeimError::InvalidArgument(
            "all singular values are zero; no rank meets the tolerance".into(),
        ));
    }
    // Tails summed from the small end to avoid cancellation.
    let n = sigma.len();
    let mut tail = vec![0.0; n + 1];
    for j in (0..n).rev() {
        tail[j] = tail[j + 1] + sigma[j] * sigma[j];
    }
    Ok((1..=n).find(|&r| (tail[r] / total).sqrt() <= tau).unwrap_or(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::orthonormality_defect;

    fn spd(m: usize) -> Matrix {
        let b = Matrix::from_fn(m, m, |i, j| ((i * 7 + j * 3) as f64 * 0.41).sin());
        &b * b.transpose() + Matrix::identity(m, m)
    }

    fn snapshots(m: usize, n: usize) -> Matrix {
        Matrix::from_fn(m, n, |i, j| {
            let x = i as f64 / m as f64;
            let mu = 1.0 + j as f64;
            (mu * x).sin() + (x * x * mu).cos() / mu
        })
    }

    #[test]
    fn identity_snapshots() {
        let w = WeightOperator::identity(2).unwrap();
        let b = pod_basis(&Matrix::identity(2, 2), &w, RankSpec::Explicit(2)).unwrap();
        assert_eq!(b.sigma(), &[1.0, 1.0]);
        assert!(orthonormality_defect(b.u_hat()) < 1e-15);
    }

    #[test]
    fn single_column() {
        let w = WeightOperator::dense(spd(5)).unwrap();
        let y = Matrix::from_column_slice(5, 1, &[1.0, -2.0, 0.5, 3.0, 0.0]);
        let b = pod_basis(&y, &w, RankSpec::Explicit(1)).unwrap();
        let yv = y.column(0).into_owned();
        let nrm = w.w_norm(&yv).unwrap();
        assert!((b.sigma()[0] - nrm).abs() < 1e-12 * nrm);
        let expected = &yv / nrm;
        let got = b.u_hat().column(0).into_owned();
        assert!((got.clone() - &expected).norm().min((got + &expected).norm()) < 1e-12);
    }

    #[test]
    fn invariants_and_routes_agree() {
        let m = 30;
        let w = WeightOperator::dense(spd(m)).unwrap();
        let y = snapshots(m, 8);
        let a = pod_basis(&y, &w, RankSpec::Explicit(4)).unwrap();
        assert!(w.w_orthonormality_defect(a.u_hat()).unwrap() < 1e-8);
        assert!(orthonormality_defect(a.u_euclid()) < 1e-10);
        let lu = w.lt_mul(a.u_hat()).unwrap();
        assert!((lu - a.u_euclid()).norm() < 1e-10);

        let g = pod_basis_gsvd(&y, &w, RankSpec::Explicit(4)).unwrap();
        for (s, t) in a.sigma().iter().zip(g.sigma()).take(4) {
            assert!((s - t).abs() <= 1e-8 * s);
        }
        assert!((a.u_hat() - g.u_hat()).norm() < 1e-6);
    }

    #[test]
    fn weighted_qr_contract() {
        let m = 20;
        let w = WeightOperator::dense(spd(m)).unwrap();
        let y = snapshots(m, 5);
        let (q, r) = weighted_qr(&y, &w).unwrap();
        assert!(w.w_orthonormality_defect(&q).unwrap() < 1e-8);
        assert!((&q * &r - &y).norm() <= 1e-12 * y.norm());
        // Already W-orthonormal input is returned unchanged.
        let (q2, r2) = weighted_qr(&q, &w).unwrap();
        assert!((q2 - &q).norm() < 1e-12);
        assert!((r2 - Matrix::identity(5, 5)).norm() < 1e-12);
    }

    #[test]
    fn breakdown_on_dependent_columns() {
        let w = WeightOperator::identity(3).unwrap();
        let y = Matrix::from_row_slice(3, 2, &[1.0, 2.0, 1.0, 2.0, 0.0, 0.0]);
        assert!(matches!(weighted_qr(&y, &w), Err(DeimError::Breakdown { column: 2, .. })));
    }

    #[test]
    fn rank_too_large_lists_sigma() {
        let w = WeightOperator::identity(3).unwrap();
        let y = Matrix::from_row_slice(3, 2, &[1.0, 2.0, 1.0, 2.0, 0.0, 0.0]);
        match pod_basis(&y, &w, RankSpec::Explicit(2)) {
            Err(DeimError::RankTooLarge { requested: 2, rank: 1, sigma }) => assert_eq!(sigma.len(), 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rank_select_examples() {
        assert_eq!(rank_select(&[1.0, 1e-16], 1e-8).unwrap(), 1);
        // Tails: sqrt(2/3) at r = 1, sqrt(1/3) at r = 2, 0 at r = 3.
        assert_eq!(rank_select(&[1.0, 1.0, 1.0], 0.5).unwrap(), 3);
        assert_eq!(rank_select(&[1.0, 1.0, 1.0], 0.6).unwrap(), 2);
        assert!(rank_select(&[0.0, 0.0], 0.5).is_err());
    }

    #[test]
    fn projection_properties() {
        let m = 12;
        let w = WeightOperator::dense(spd(m)).unwrap();
        let b = pod_basis(&snapshots(m, 6), &w, RankSpec::Explicit(3)).unwrap();
        let f = Vector::from_fn(m, |i, _| (i as f64 * 1.3).cos());
        let pf = b.project(&f).unwrap();
        assert!((b.project(&pf).unwrap() - &pf).norm() <= 1e-10 * pf.norm());
        let n2 = w.w_norm(&f).unwrap().powi(2);
        let p2 = w.w_norm(&pf).unwrap().powi(2);
        let e2 = w.w_norm(&(&f - &pf)).unwrap().powi(2);
        assert!((n2 - p2 - e2).abs() <= 1e-9 * n2);
        let in_span = b.u_hat() * Vector::from_vec(vec![0.3, -1.0, 2.0]);
        assert!((b.project(&in_span).unwrap() - &in_span).norm() <= 1e-10 * in_span.norm());
    }

    #[test]
    fn truncation_matches_direct_build() {
        let m = 15;
        let w = WeightOperator::diagonal((1..=m).map(|i| i as f64).collect()).unwrap();
        let y = snapshots(m, 7);
        let full = pod_basis(&y, &w, RankSpec::Explicit(5)).unwrap();
        let direct = pod_basis(&y, &w, RankSpec::Explicit(2)).unwrap();
        let cut = full.truncate(2).unwrap();
        assert_eq!(cut.u_hat(), direct.u_hat());
        assert_eq!(cut.rank(), 2);
    }

    #[test]
    fn centering_is_opt_in() {
        let w = WeightOperator::identity(4).unwrap();
        let y = Matrix::from_fn(4, 3, |i, j| 1.0 + (i * j) as f64);
        let plain = pod_basis(&y, &w, RankSpec::Explicit(1)).unwrap();
        assert!(plain.mean().is_none());
        let c = pod_basis_with(&y, &w, RankSpec::Explicit(1), &PodOptions { center: true }).unwrap();
        assert!(c.mean().is_some());
        assert!(c.sigma()[0] < plain.sigma()[0]);
    }
}
