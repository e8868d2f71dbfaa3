//! DEIM projectors and their diagnostics.
//!
//! Every variant is stored in the factored form `D f = B K^+ g(f)`, where
//! `g(f)` are the `s` sampled values of `f`, `K` is the `s x r` sampled
//! basis and `B` spans the approximation space. Applying `D` costs
//! `O(m r + r^2)` once the sampled values are known. The dense `m x m`
//! matrix is only built on request by [`DeimProjector::assemble`].
//!
//! | variant | `B` | `K` | sampled values |
//! |---|---|---|---|
//! | unweighted | `U_r` | `S^T U_r` | `f[idx]` |
//! | generalized W | `U_hat` | `S^T U_r` | `(L^T f)[idx]` |
//! | pointwise W | `Q` (QR of `U_hat`) | `S^T Q` | `f[idx]` |
//! | scaled pointwise W | `Delta^{-1} Q` (QR of `Delta U_hat`) | `S^T Q` | `Delta[idx] f[idx]` |
//! | oversampled | as unweighted or generalized | `s != r` | as above |

mod canonical;

pub use canonical::{canonical_analysis, canonical_analysis_with_basis, CanonicalStructure, ANGLE_TOL};

use std::fmt;
use std::str::FromStr;

use crate::error::{DeimError, Result};
use crate::linalg::{
    ensure_finite, ensure_orthonormal, householder_qr, pseudo_inverse, qr_column_pivoted, select_rows,
    solve_triangular, Matrix, PseudoInverse, Triangle, Vector, PINV_RCOND,
};
use crate::pod::{pod_basis, PodBasis, RankSpec};
use crate::selection::{pinv_norm, select, SelectionOperator, Strategy};
use crate::weighting::WeightOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Unweighted,
    GeneralizedW,
    PointwiseW,
    ScaledPointwiseW,
    Oversampled,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Unweighted => "unweighted",
            Variant::GeneralizedW => "generalized-w",
            Variant::PointwiseW => "pointwise-w",
            Variant::ScaledPointwiseW => "scaled-pointwise-w",
            Variant::Oversampled => "oversampled",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = DeimError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "unweighted" => Variant::Unweighted,
            "generalized-w" => Variant::GeneralizedW,
            "pointwise-w" => Variant::PointwiseW,
            "scaled-pointwise-w" => Variant::ScaledPointwiseW,
            "oversampled" => Variant::Oversampled,
            other => return Err(DeimError::InvalidArgument(format!("unknown variant '{other}'"))),
        })
    }
}

/// Which of the two defining properties a projector has.
///
/// With `s = r` both hold. With `s < r` only interpolation holds, and with
/// `s > r` only the projection property `D P = P` does.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProjectorProperty {
    pub interpolation: bool,
    pub projection: bool,
}

#[derive(Debug, Clone)]
enum Sampling {
    Rows,
    ScaledRows(Vec<f64>),
    Functionals,
}

#[derive(Debug, Clone)]
enum Solver {
    /// Column-pivoted QR of a square `K`.
    Square { q: Matrix, r: Matrix, perm: Vec<usize> },
    Pseudo(PseudoInverse),
}

impl Solver {
    fn new(k: &Matrix) -> Result<Self> {
        if k.nrows() == k.ncols() {
            let f = qr_column_pivoted(k)?;
            Ok(Solver::Square {
                q: f.q,
                r: f.r,
                perm: f.perm,
            })
        } else {
            let p = pseudo_inverse(k, PINV_RCOND)?;
            let full = k.nrows().min(k.ncols());
            if p.rank < full {
                return Err(DeimError::RankDeficient {
                    sigma_min: p.sigma[full - 1],
                    sigma_max: p.sigma[0],
                });
            }
            Ok(Solver::Pseudo(p))
        }
    }

    fn solve(&self, g: &Matrix) -> Matrix {
        match self {
            Solver::Square { q, r, perm } => {
                let y = solve_triangular(r, &q.tr_mul(g), Triangle::Upper, crate::linalg::Side::Left, false)
                    .expect("nonsingularity checked at build time");
                let mut x = Matrix::zeros(y.nrows(), y.ncols());
                for (k, &p) in perm.iter().enumerate() {
                    x.set_row(p, &y.row(k));
                }
                x
            }
            Solver::Pseudo(p) => p.apply(g),
        }
    }
}

/// An immutable DEIM projector. `apply` is pure and can be called from many
/// threads at once.
#[derive(Debug, Clone)]
pub struct DeimProjector {
    variant: Variant,
    range: Matrix,
    kernel: Matrix,
    solver: Solver,
    sampling: Sampling,
    selection: SelectionOperator,
    weight: WeightOperator,
    u_hat: Matrix,
    u_euclid: Matrix,
    kernel_inv_norm: f64,
    error_constant: f64,
}

fn check_selection(sel: &SelectionOperator, m: usize) -> Result<()> {
    if sel.dim() != m {
        return Err(DeimError::DimensionMismatch {
            expected: m,
            found: sel.dim(),
        });
    }
    Ok(())
}

/// Classic DEIM `D = U (S^T U)^{-1} S^T`. With `s > r` the pseudoinverse is
/// used and the result is the oversampled projector.
pub fn build_deim(u: &Matrix, sel: &SelectionOperator) -> Result<DeimProjector> {
    ensure_finite(u)?;
    ensure_orthonormal(u)?;
    check_selection(sel, u.nrows())?;
    let r = u.ncols();
    if sel.len() < r {
        return Err(DeimError::InvalidArgument(format!(
            "{} indices for rank {r}; use build_oversampled for s < r",
            sel.len()
        )));
    }
    euclidean(u, sel)
}

/// `D = U (S^T U)^+ S^T` for any `s`. With `s = r` this is [`build_deim`].
pub fn build_oversampled(u: &Matrix, sel: &SelectionOperator) -> Result<DeimProjector> {
    ensure_finite(u)?;
    ensure_orthonormal(u)?;
    check_selection(sel, u.nrows())?;
    euclidean(u, sel)
}

fn euclidean(u: &Matrix, sel: &SelectionOperator) -> Result<DeimProjector> {
    let m = u.nrows();
    let kernel = select_rows(u, sel.indices());
    let kernel_inv_norm = pinv_norm(&kernel)?;
    let variant = if sel.len() == u.ncols() {
        Variant::Unweighted
    } else {
        Variant::Oversampled
    };
    Ok(DeimProjector {
        variant,
        range: u.clone(),
        solver: Solver::new(&kernel)?,
        kernel,
        sampling: Sampling::Rows,
        selection: sel.clone(),
        weight: WeightOperator::identity(m)?,
        u_hat: u.clone(),
        u_euclid: u.clone(),
        kernel_inv_norm,
        error_constant: kernel_inv_norm,
    })
}

/// Generalized W-DEIM `D = U_hat (S^T U_r)^+ S^T L^T`. The selection must
/// come from `basis.u_euclid()`. With `s != r` the result is the weighted
/// oversampled projector.
pub fn build_wdeim_generalized(basis: &PodBasis, sel: &SelectionOperator) -> Result<DeimProjector> {
    check_selection(sel, basis.dim())?;
    let kernel = select_rows(basis.u_euclid(), sel.indices());
    let kernel_inv_norm = pinv_norm(&kernel)?;
    let variant = if sel.len() == basis.rank() {
        Variant::GeneralizedW
    } else {
        Variant::Oversampled
    };
    Ok(DeimProjector {
        variant,
        range: basis.u_hat().clone(),
        solver: Solver::new(&kernel)?,
        kernel,
        sampling: Sampling::Functionals,
        selection: sel.clone(),
        weight: basis.weight().clone(),
        u_hat: basis.u_hat().clone(),
        u_euclid: basis.u_euclid().clone(),
        kernel_inv_norm,
        error_constant: kernel_inv_norm,
    })
}

/// Same as [`build_wdeim_generalized`] but named for the `s != r` use.
pub fn build_oversampled_weighted(basis: &PodBasis, sel: &SelectionOperator) -> Result<DeimProjector> {
    build_wdeim_generalized(basis, sel)
}

/// Pointwise W-DEIM from snapshots: weighted POD, thin QR `U_hat = Q R`,
/// selection on `Q`, `D = Q (S^T Q)^{-1} S^T`.
pub fn build_wdeim_pointwise(
    y: &Matrix,
    w: &WeightOperator,
    rank: RankSpec,
    eta: f64,
) -> Result<DeimProjector> {
    let basis = pod_basis(y, w, rank)?;
    build_wdeim_pointwise_from_basis(&basis, Strategy::Srrqr, eta)
}

/// The orthonormal factor `Q` of `U_hat` that pointwise selection runs on.
pub fn pointwise_selection_basis(basis: &PodBasis) -> Result<Matrix> {
    Ok(householder_qr(basis.u_hat())?.q)
}

pub fn build_wdeim_pointwise_from_basis(
    basis: &PodBasis,
    strategy: Strategy,
    eta: f64,
) -> Result<DeimProjector> {
    let q = pointwise_selection_basis(basis)?;
    let sel = select(&q, strategy, eta)?;
    build_wdeim_pointwise_with(basis, &q, sel)
}

/// Pointwise W-DEIM with a given selection on `q = pointwise_selection_basis(basis)`.
pub fn build_wdeim_pointwise_with(
    basis: &PodBasis,
    q: &Matrix,
    sel: SelectionOperator,
) -> Result<DeimProjector> {
    check_selection(&sel, basis.dim())?;
    square_only(&sel, basis.rank())?;
    let kernel = select_rows(q, sel.indices());
    let kernel_inv_norm = pinv_norm(&kernel)?;
    let w = basis.weight();
    Ok(DeimProjector {
        variant: Variant::PointwiseW,
        range: q.clone(),
        solver: Solver::new(&kernel)?,
        kernel,
        sampling: Sampling::Rows,
        selection: sel,
        weight: w.clone(),
        u_hat: basis.u_hat().clone(),
        u_euclid: basis.u_euclid().clone(),
        kernel_inv_norm,
        error_constant: w.condition_estimate().sqrt() * kernel_inv_norm,
    })
}

/// Scaled pointwise W-DEIM from snapshots: with `Delta = diag(sqrt(W_ii))`,
/// thin QR `Delta U_hat = Q R`, selection on `Q`,
/// `D = Delta^{-1} Q (S^T Q)^{-1} S^T Delta`.
pub fn build_wdeim_scaled(
    y: &Matrix,
    w: &WeightOperator,
    rank: RankSpec,
    eta: f64,
) -> Result<DeimProjector> {
    let basis = pod_basis(y, w, rank)?;
    build_wdeim_scaled_from_basis(&basis, Strategy::Srrqr, eta)
}

/// The orthonormal factor `Q` of `Delta U_hat` that scaled selection runs on.
pub fn scaled_selection_basis(basis: &PodBasis) -> Result<Matrix> {
    let delta = &basis.weight().equilibrate().delta;
    let mut scaled = basis.u_hat().clone();
    for (i, d) in delta.iter().enumerate() {
        scaled.row_mut(i).scale_mut(*d);
    }
    Ok(householder_qr(&scaled)?.q)
}

pub fn build_wdeim_scaled_from_basis(
    basis: &PodBasis,
    strategy: Strategy,
    eta: f64,
) -> Result<DeimProjector> {
    let q = scaled_selection_basis(basis)?;
    let sel = select(&q, strategy, eta)?;
    build_wdeim_scaled_with(basis, &q, sel)
}

/// Scaled pointwise W-DEIM with a given selection on `q = scaled_selection_basis(basis)`.
pub fn build_wdeim_scaled_with(
    basis: &PodBasis,
    q: &Matrix,
    sel: SelectionOperator,
) -> Result<DeimProjector> {
    check_selection(&sel, basis.dim())?;
    square_only(&sel, basis.rank())?;
    let w = basis.weight();
    let eq = w.equilibrate();
    let mut range = q.clone();
    for (i, d) in eq.delta.iter().enumerate() {
        range.row_mut(i).scale_mut(1.0 / d);
    }
    let kernel = select_rows(q, sel.indices());
    let kernel_inv_norm = pinv_norm(&kernel)?;
    let delta_sel = sel.indices().iter().map(|&i| eq.delta[i]).collect();
    Ok(DeimProjector {
        variant: Variant::ScaledPointwiseW,
        range,
        solver: Solver::new(&kernel)?,
        kernel,
        sampling: Sampling::ScaledRows(delta_sel),
        selection: sel,
        weight: w.clone(),
        u_hat: basis.u_hat().clone(),
        u_euclid: basis.u_euclid().clone(),
        kernel_inv_norm,
        error_constant: eq.ws.condition_estimate().sqrt() * kernel_inv_norm,
    })
}

fn square_only(sel: &SelectionOperator, r: usize) -> Result<()> {
    if sel.len() != r {
        return Err(DeimError::InvalidArgument(format!(
            "pointwise variants need s = r, got s = {} and r = {r}",
            sel.len()
        )));
    }
    Ok(())
}

/// `||f - D f||_W`, `||f - P f||_W` and the pieces of the oblique excess.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorDecomposition {
    /// `||f - P f||_W`.
    pub orth_err: f64,
    /// `||P f - D f||_W`.
    pub oblique_excess: f64,
    /// `sqrt(1 + excess^2 / orth_err^2)`, the effective amplification for this `f`.
    pub kappa_prime: f64,
    /// `||f - D f||_W`.
    pub total: f64,
}

impl DeimProjector {
    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn selection(&self) -> &SelectionOperator {
        &self.selection
    }

    pub fn weight(&self) -> &WeightOperator {
        &self.weight
    }

    pub fn dim(&self) -> usize {
        self.range.nrows()
    }

    pub fn rank(&self) -> usize {
        self.range.ncols()
    }

    /// Number of sampled values `s`.
    pub fn samples(&self) -> usize {
        self.selection.len()
    }

    /// `true` when the sampled values are functionals `(L^T f)[idx]` rather
    /// than entries of `f`.
    pub fn uses_functionals(&self) -> bool {
        matches!(self.sampling, Sampling::Functionals)
    }

    /// The `W`-orthonormal basis of the approximation space.
    pub fn u_hat(&self) -> &Matrix {
        &self.u_hat
    }

    /// `L^T U_hat`, orthonormal.
    pub fn u_euclid(&self) -> &Matrix {
        &self.u_euclid
    }

    /// The orthonormal factor `Q` for the pointwise variants.
    pub fn q_hat(&self) -> Option<&Matrix> {
        match self.variant {
            Variant::PointwiseW => Some(&self.range),
            _ => None,
        }
    }

    /// `Delta[idx]` for the scaled variant.
    pub fn delta_sel(&self) -> Option<&[f64]> {
        match &self.sampling {
            Sampling::ScaledRows(d) => Some(d),
            _ => None,
        }
    }

    /// The sampled basis `K` (`s x r`).
    pub fn sampled_basis(&self) -> &Matrix {
        &self.kernel
    }

    /// `||K^+||_2` for the sampled basis `K`.
    pub fn kernel_inv_norm(&self) -> f64 {
        self.kernel_inv_norm
    }

    /// The certified constant `C` in `||f - D f||_W <= C ||f - P f||_W`.
    ///
    /// It is `||K^+||_2` for the unweighted, generalized and oversampled
    /// variants, `sqrt(kappa(W)) ||K^{-1}||_2` for pointwise and
    /// `sqrt(kappa(W_s)) ||K^{-1}||_2` for scaled pointwise.
    pub fn error_constant(&self) -> f64 {
        self.error_constant
    }

    /// The a priori bound with the strong RRQR factor
    /// `sqrt(1 + eta^2 r (m - r))` in place of `||K^{-1}||_2`.
    pub fn a_priori_bound(&self) -> Option<f64> {
        let lemma = self.selection.lemma_bound()?;
        Some(self.error_constant / self.kernel_inv_norm * lemma)
    }

    pub fn property(&self) -> ProjectorProperty {
        let (s, r) = (self.samples(), self.rank());
        ProjectorProperty {
            interpolation: s <= r,
            projection: s >= r,
        }
    }

    /// The `s` sampled values the projector reads from `f`.
    pub fn sample(&self, f: &Vector) -> Result<Vector> {
        self.check_len(f.len())?;
        let idx = self.selection.indices();
        Ok(match &self.sampling {
            Sampling::Rows | Sampling::ScaledRows(_) => Vector::from_iterator(idx.len(), idx.iter().map(|&i| f[i])),
            Sampling::Functionals => {
                let lf = self.weight.lt_mul_vec(f)?;
                Vector::from_iterator(idx.len(), idx.iter().map(|&i| lf[i]))
            }
        })
    }

    /// Interpolation coefficients `K^+ g` for sampled values `g`.
    pub fn coefficients(&self, sampled: &[f64]) -> Result<Vector> {
        if sampled.len() != self.samples() {
            return Err(DeimError::DimensionMismatch {
                expected: self.samples(),
                found: sampled.len(),
            });
        }
        let mut g = Matrix::from_column_slice(sampled.len(), 1, sampled);
        if let Sampling::ScaledRows(d) = &self.sampling {
            for (x, d) in g.iter_mut().zip(d) {
                *x *= d;
            }
        }
        Ok(self.solver.solve(&g).column(0).into_owned())
    }

    /// `D f` from the sampled values alone. For the pointwise variants
    /// `sampled[j] = f[idx[j]]`; for the generalized one `(L^T f)[idx[j]]`.
    pub fn apply_sampled(&self, sampled: &[f64]) -> Result<Vector> {
        Ok(&self.range * self.coefficients(sampled)?)
    }

    pub fn apply(&self, f: &Vector) -> Result<Vector> {
        let g = self.sample(f)?;
        self.apply_sampled(g.as_slice())
    }

    /// Column-wise application.
    pub fn apply_matrix(&self, f: &Matrix) -> Result<Matrix> {
        self.check_len(f.nrows())?;
        let idx = self.selection.indices();
        let mut g = match &self.sampling {
            Sampling::Rows | Sampling::ScaledRows(_) => select_rows(f, idx),
            Sampling::Functionals => select_rows(&self.weight.lt_mul(f)?, idx),
        };
        if let Sampling::ScaledRows(d) = &self.sampling {
            for (k, d) in d.iter().enumerate() {
                g.row_mut(k).scale_mut(*d);
            }
        }
        Ok(&self.range * self.solver.solve(&g))
    }

    /// The dense `m x m` matrix `D`. Diagnostic only: `O(m^2)` storage.
    pub fn assemble(&self) -> Result<Matrix> {
        let m = self.dim();
        let idx = self.selection.indices();
        let s = idx.len();
        // Rows of the sampling operator, as an s x m matrix G with g(f) = G f.
        let g = match &self.sampling {
            Sampling::Rows => Matrix::from_fn(s, m, |k, j| if idx[k] == j { 1.0 } else { 0.0 }),
            Sampling::ScaledRows(d) => Matrix::from_fn(s, m, |k, j| if idx[k] == j { d[k] } else { 0.0 }),
            Sampling::Functionals => {
                let e = Matrix::from_fn(m, s, |i, k| if idx[k] == i { 1.0 } else { 0.0 });
                self.weight.l_mul(&e)?.transpose()
            }
        };
        Ok(&self.range * self.solver.solve(&g))
    }

    /// `L^T D L^{-T}`, the Euclidean picture of `D` in the `W` geometry.
    pub fn assemble_transformed(&self) -> Result<Matrix> {
        self.weight.transformed(&self.assemble()?)
    }

    /// `P f = U_hat U_hat^T W f`, the `W`-orthogonal projection onto the
    /// approximation space.
    pub fn orthogonal_projection(&self, f: &Vector) -> Result<Vector> {
        let wf = self.weight.mul_vec(f)?;
        Ok(&self.u_hat * self.u_hat.tr_mul(&wf))
    }

    /// Residuals of the interpolation conditions at the selected indices:
    /// `(D f - f)[idx]` for pointwise sampling and `(L^T (D f - f))[idx]`
    /// for the generalized variant.
    pub fn interpolation_residuals(&self, f: &Vector) -> Result<Vector> {
        let df = self.apply(f)?;
        let diff = df - f;
        Ok(match &self.sampling {
            Sampling::Rows | Sampling::ScaledRows(_) => {
                let idx = self.selection.indices();
                Vector::from_iterator(idx.len(), idx.iter().map(|&i| diff[i]))
            }
            Sampling::Functionals => self.sample(&diff)?,
        })
    }

    /// `l_j^T (D f - f)` for the selected columns `l_j` of `L`.
    pub fn dgeim_residuals(&self, f: &Vector) -> Result<Vector> {
        if !self.uses_functionals() {
            return Err(DeimError::WrongVariant {
                expected: Variant::GeneralizedW.as_str(),
                found: self.variant.as_str(),
            });
        }
        self.interpolation_residuals(f)
    }

    /// `||D||_W` without assembling `D`: `||K^+||_2` where that is exact,
    /// otherwise `1 / cos` of the largest canonical angle.
    pub fn operator_norm(&self) -> Result<f64> {
        match self.variant {
            Variant::PointwiseW | Variant::ScaledPointwiseW if !self.weight.is_identity() => {
                Ok(canonical_analysis(self)?.norm_d)
            }
            _ => Ok(self.kernel_inv_norm),
        }
    }

    /// `||f - D f||_W` and `||f - P f||_W`, the two sides of the error bound.
    pub fn errors(&self, f: &Vector) -> Result<(f64, f64)> {
        let df = self.apply(f)?;
        let pf = self.orthogonal_projection(f)?;
        Ok((self.weight.w_norm(&(f - df))?, self.weight.w_norm(&(f - pf))?))
    }

    /// Splits `f - D f = (f - P f) + (P f - D f)` into its two `W`-orthogonal
    /// pieces.
    pub fn error_decomposition(&self, f: &Vector) -> Result<ErrorDecomposition> {
        if !self.property().projection {
            return Err(DeimError::InvalidArgument(
                "error decomposition needs s >= r so that D P = P".into(),
            ));
        }
        let df = self.apply(f)?;
        let pf = self.orthogonal_projection(f)?;
        let w = &self.weight;
        let fnorm = w.w_norm(f)?;
        let orth_err = w.w_norm(&(f - &pf))?;
        if !(orth_err > 1e-13 * fnorm) {
            return Err(DeimError::InvalidArgument(
                "f lies in the approximation space, where D f = f exactly".into(),
            ));
        }
        let oblique_excess = w.w_norm(&(&pf - &df))?;
        let total = w.w_norm(&(f - &df))?;
        let ratio = oblique_excess / orth_err;
        Ok(ErrorDecomposition {
            orth_err,
            oblique_excess,
            kappa_prime: (1.0 + ratio * ratio).sqrt(),
            total,
        })
    }

    /// Text form: `DEIM <variant> <m> <r>` followed by the selection line.
    pub fn to_text(&self) -> String {
        format!(
            "DEIM {} {} {}\n{}\n",
            self.variant,
            self.dim(),
            self.rank(),
            self.selection.to_line()
        )
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n != self.dim() {
            return Err(DeimError::DimensionMismatch {
                expected: self.dim(),
                found: n,
            });
        }
        Ok(())
    }

    /// Orthonormal bases `(X, Y)` with `D~ = X (Y^T X)^+ Y^T` for the
    /// transformed `D~ = L^T D L^{-T}`.
    pub(crate) fn transformed_pair(&self) -> Result<(Matrix, Matrix)> {
        let m = self.dim();
        let idx = self.selection.indices();
        let s_hat = Matrix::from_fn(m, idx.len(), |i, k| if idx[k] == i { 1.0 } else { 0.0 });
        let y = match self.variant {
            Variant::PointwiseW | Variant::ScaledPointwiseW if !self.weight.is_identity() => {
                // D~ is oblique along range(L^{-1} S)^perp; Delta only rescales
                // the columns of S, so both pointwise variants share it.
                householder_qr(&self.weight.l_solve(&s_hat)?)?.q
            }
            _ => s_hat,
        };
        Ok((self.u_euclid.clone(), y))
    }
}

#[cfg(test)]
mod tests;
