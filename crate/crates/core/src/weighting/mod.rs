//! Symmetric positive definite weights and the `W` inner product.
//!
//! A [`WeightOperator`] stores `W` in one of four forms and carries a factor
//! `W = L L^T` computed at construction. Every weighted quantity in the crate
//! goes through the factor: `||u||_W = ||L^T u||_2` and
//! `||M||_W = ||L^T M L^{-T}||_2`.
//!
//! Sparse weights are reordered by reverse Cuthill–McKee before an envelope
//! Cholesky factorization, so their `L` is `P L_s` with `L_s` lower
//! triangular.

mod factor;
mod sparse;

use std::sync::{Arc, OnceLock};

pub use sparse::SymSparse;

use self::factor::{dense_factor, Factor, FactorOp, Skyline};
use self::sparse::{ASYMMETRY_ERROR, ASYMMETRY_WARN};
use crate::error::{DeimError, Result};
use crate::linalg::{asymmetry, ensure_finite, spectral_norm, thin_svd, Matrix, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WeightKind {
    Identity,
    Diagonal,
    Sparse,
    Dense,
}

impl WeightKind {
    pub fn as_str(self) -> &'static str {
        match self {
            WeightKind::Identity => "identity",
            WeightKind::Diagonal => "diagonal",
            WeightKind::Sparse => "sparse",
            WeightKind::Dense => "dense",
        }
    }
}

impl std::fmt::Display for WeightKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug)]
pub(crate) enum Storage {
    Identity,
    Diagonal(Vec<f64>),
    Sparse(SymSparse),
    Dense(Matrix),
}

/// Diagonal equilibration `W_s = Delta^{-1} W Delta^{-1}`, `Delta = diag(sqrt(W_ii))`.
#[derive(Debug, Clone)]
pub struct Equilibration {
    pub delta: Vec<f64>,
    pub ws: WeightOperator,
}

#[derive(Debug)]
struct Inner {
    m: usize,
    storage: Storage,
    factor: Factor,
    equilibration: OnceLock<Equilibration>,
    condition: OnceLock<f64>,
}

/// An SPD inner-product matrix. Cloning is cheap and shares the caches.
#[derive(Clone)]
pub struct WeightOperator {
    inner: Arc<Inner>,
}

impl std::fmt::Debug for WeightOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WeightOperator")
            .field("kind", &self.kind())
            .field("dim", &self.dim())
            .finish()
    }
}

impl WeightOperator {
    fn from_parts(m: usize, storage: Storage, factor: Factor) -> Self {
        Self {
            inner: Arc::new(Inner {
                m,
                storage,
                factor,
                equilibration: OnceLock::new(),
                condition: OnceLock::new(),
            }),
        }
    }

    pub fn identity(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(DeimError::Empty { rows: 0, cols: 0 });
        }
        Ok(Self::from_parts(m, Storage::Identity, Factor::Identity))
    }

    pub fn diagonal(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(DeimError::Empty { rows: 0, cols: 0 });
        }
        for (i, &v) in w.iter().enumerate() {
            if !v.is_finite() {
                return Err(DeimError::NonFinite { row: i, col: i });
            }
            if !(v > 0.0) {
                return Err(DeimError::NotPositiveDefinite { pivot: i + 1 });
            }
        }
        let sq = w.iter().map(|v| v.sqrt()).collect();
        Ok(Self::from_parts(w.len(), Storage::Diagonal(w), Factor::Diagonal(sq)))
    }

    /// Dense SPD weight. Inputs with relative asymmetry above `1e-6` are
    /// rejected; smaller asymmetry is removed by `(W + W^T) / 2`.
    pub fn dense(w: Matrix) -> Result<Self> {
        ensure_finite(&w)?;
        let m = w.nrows();
        if w.ncols() != m {
            return Err(DeimError::DimensionMismatch {
                expected: m,
                found: w.ncols(),
            });
        }
        let asym = asymmetry(&w);
        if asym > ASYMMETRY_ERROR {
            return Err(DeimError::NotSymmetric { asymmetry: asym });
        }
        if asym > ASYMMETRY_WARN {
            log::warn!("symmetrizing dense weight with relative asymmetry {asym:.3e}");
        }
        let w = if asym > 0.0 { (&w + w.transpose()) * 0.5 } else { w };
        let factor = dense_factor(&w)?;
        Ok(Self::from_parts(m, Storage::Dense(w), factor))
    }

    /// Sparse SPD weight, factored after a reverse Cuthill–McKee reordering.
    pub fn sparse(a: SymSparse) -> Result<Self> {
        let perm = a.rcm_order();
        let sky = Skyline::factorize(&a, perm)?;
        Ok(Self::from_parts(a.dim(), Storage::Sparse(a), Factor::Skyline(sky)))
    }

    /// Sparse weight from 0-based triplets describing the full matrix.
    pub fn sparse_from_triplets<I>(m: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        Self::sparse(SymSparse::from_triplets(m, triplets, false)?)
    }

    pub fn kind(&self) -> WeightKind {
        match self.inner.storage {
            Storage::Identity => WeightKind::Identity,
            Storage::Diagonal(_) => WeightKind::Diagonal,
            Storage::Sparse(_) => WeightKind::Sparse,
            Storage::Dense(_) => WeightKind::Dense,
        }
    }

    pub fn dim(&self) -> usize {
        self.inner.m
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.inner.storage, Storage::Identity)
    }

    /// Diagonal entries for the diagonal kind, `None` otherwise.
    pub fn diagonal_entries(&self) -> Option<&[f64]> {
        match &self.inner.storage {
            Storage::Diagonal(d) => Some(d),
            _ => None,
        }
    }

    pub fn sparse_matrix(&self) -> Option<&SymSparse> {
        match &self.inner.storage {
            Storage::Sparse(s) => Some(s),
            _ => None,
        }
    }

    pub fn diagonal_of_w(&self) -> Vec<f64> {
        match &self.inner.storage {
            Storage::Identity => vec![1.0; self.dim()],
            Storage::Diagonal(d) => d.clone(),
            Storage::Sparse(s) => s.diagonal(),
            Storage::Dense(w) => (0..self.dim()).map(|i| w[(i, i)]).collect(),
        }
    }

    pub fn to_dense(&self) -> Matrix {
        match &self.inner.storage {
            Storage::Identity => Matrix::identity(self.dim(), self.dim()),
            Storage::Diagonal(d) => Matrix::from_diagonal(&Vector::from_column_slice(d)),
            Storage::Sparse(s) => s.to_dense(),
            Storage::Dense(w) => w.clone(),
        }
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

    fn mul_slice(&self, x: &[f64], out: &mut [f64]) {
        match &self.inner.storage {
            Storage::Identity => out.copy_from_slice(x),
            Storage::Diagonal(d) => {
                for ((o, xi), di) in out.iter_mut().zip(x).zip(d) {
                    *o = xi * di;
                }
            }
            Storage::Sparse(s) => s.mul_into(x, out),
            Storage::Dense(w) => {
                let m = self.dim();
                out.iter_mut().for_each(|v| *v = 0.0);
                let ws = w.as_slice();
                for (j, &xj) in x.iter().enumerate() {
                    for (o, wij) in out.iter_mut().zip(&ws[j * m..(j + 1) * m]) {
                        *o += wij * xj;
                    }
                }
            }
        }
    }

    /// `W X`.
    pub fn mul(&self, x: &Matrix) -> Result<Matrix> {
        self.check_len(x.nrows())?;
        let m = self.dim();
        let mut out = Matrix::zeros(m, x.ncols());
        if let Storage::Dense(w) = &self.inner.storage {
            out.gemm(1.0, w, x, 0.0);
            return Ok(out);
        }
        let xs = x.as_slice();
        let os = out.as_mut_slice();
        for c in 0..x.ncols() {
            self.mul_slice(&xs[c * m..(c + 1) * m], &mut os[c * m..(c + 1) * m]);
        }
        Ok(out)
    }

    pub fn mul_vec(&self, x: &Vector) -> Result<Vector> {
        self.check_len(x.len())?;
        let mut out = Vector::zeros(self.dim());
        self.mul_slice(x.as_slice(), out.as_mut_slice());
        Ok(out)
    }

    fn factor_op(&self, op: FactorOp, x: &Matrix) -> Result<Matrix> {
        self.check_len(x.nrows())?;
        Ok(self.inner.factor.apply_matrix(op, x))
    }

    /// `L^T X`.
    pub fn lt_mul(&self, x: &Matrix) -> Result<Matrix> {
        self.factor_op(FactorOp::Lt, x)
    }

    /// `L X`.
    pub fn l_mul(&self, x: &Matrix) -> Result<Matrix> {
        self.factor_op(FactorOp::L, x)
    }

    /// `L^{-T} X`.
    pub fn lt_solve(&self, x: &Matrix) -> Result<Matrix> {
        self.factor_op(FactorOp::LtInv, x)
    }

    /// `L^{-1} X`.
    pub fn l_solve(&self, x: &Matrix) -> Result<Matrix> {
        self.factor_op(FactorOp::LInv, x)
    }

    pub fn lt_mul_vec(&self, x: &Vector) -> Result<Vector> {
        self.check_len(x.len())?;
        let mut out = Vector::zeros(self.dim());
        self.inner.factor.apply(FactorOp::Lt, x.as_slice(), out.as_mut_slice());
        Ok(out)
    }

    /// `W^{-1} X` through the factor.
    pub fn solve(&self, x: &Matrix) -> Result<Matrix> {
        let y = self.l_solve(x)?;
        self.lt_solve(&y)
    }

    /// `L` as a dense matrix, including any permutation.
    pub fn factor_dense(&self) -> Matrix {
        self.inner.factor.apply_matrix(FactorOp::L, &Matrix::identity(self.dim(), self.dim()))
    }

    /// The triangular factor and its permutation: `P^T W P = T T^T` with
    /// `(P^T W P)_ab = W[perm[a], perm[b]]`.
    pub fn factorize(&self) -> (Matrix, Vec<usize>) {
        self.inner.factor.triangular_dense(self.dim())
    }

    /// Lower bandwidth of the triangular factor.
    pub fn factor_bandwidth(&self) -> usize {
        self.inner.factor.bandwidth(self.dim())
    }

    /// `(u, v)_W = v^T W u`.
    pub fn w_inner(&self, u: &Vector, v: &Vector) -> Result<f64> {
        self.check_len(v.len())?;
        Ok(self.mul_vec(u)?.dot(v))
    }

    /// `||u||_W`, evaluated as `||L^T u||_2`.
    pub fn w_norm(&self, u: &Vector) -> Result<f64> {
        Ok(self.lt_mul_vec(u)?.norm())
    }

    /// `||M||_W = ||L^T M L^{-T}||_2`.
    pub fn w_operator_norm(&self, m: &Matrix) -> Result<f64> {
        if m.nrows() != m.ncols() {
            return Err(DeimError::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        let t = self.transformed(m)?;
        spectral_norm(&t)
    }

    /// `L^T M L^{-T}`, the Euclidean image of `M` under `u -> L^T u`.
    pub fn transformed(&self, m: &Matrix) -> Result<Matrix> {
        self.check_len(m.nrows())?;
        // M L^{-T} = (L^{-1} M^T)^T
        let right = self.l_solve(&m.transpose())?.transpose();
        self.lt_mul(&right)
    }

    /// The `W`-adjoint `W^{-1} M^T W`.
    pub fn w_adjoint(&self, m: &Matrix) -> Result<Matrix> {
        // M^T W = (W M)^T since W is symmetric
        let mtw = self.mul(m)?.transpose();
        self.solve(&mtw)
    }

    /// `||X^T W X - I||_F`.
    pub fn w_orthonormality_defect(&self, x: &Matrix) -> Result<f64> {
        let lx = self.lt_mul(x)?;
        Ok(crate::linalg::orthonormality_defect(&lx))
    }

    /// Diagonal equilibration, computed on first use and cached.
    pub fn equilibrate(&self) -> &Equilibration {
        self.inner.equilibration.get_or_init(|| self.build_equilibration())
    }

    fn build_equilibration(&self) -> Equilibration {
        let m = self.dim();
        let delta: Vec<f64> = self.diagonal_of_w().iter().map(|v| v.sqrt()).collect();
        let inv: Vec<f64> = delta.iter().map(|d| 1.0 / d).collect();
        let ws = match &self.inner.storage {
            Storage::Identity | Storage::Diagonal(_) => {
                Self::from_parts(m, Storage::Identity, Factor::Identity)
            }
            Storage::Sparse(s) => Self::from_parts(
                m,
                Storage::Sparse(s.scaled(&inv, Some(1.0))),
                self.inner.factor.row_scaled(&inv),
            ),
            Storage::Dense(w) => {
                let ws = Matrix::from_fn(m, m, |i, j| {
                    if i == j {
                        1.0
                    } else {
                        w[(i, j)] / (delta[i] * delta[j])
                    }
                });
                Self::from_parts(m, Storage::Dense(ws), self.inner.factor.row_scaled(&inv))
            }
        };
        Equilibration { delta, ws }
    }

    /// `kappa_2(W)`, computed on first use and cached.
    ///
    /// Exact for identity, diagonal, dense and sparse weights up to
    /// [`CONDITION_DENSE_LIMIT`]; larger sparse weights use Lanczos on `W`
    /// and on `W^{-1}`.
    pub fn condition_estimate(&self) -> f64 {
        *self.inner.condition.get_or_init(|| self.compute_condition())
    }

    fn compute_condition(&self) -> f64 {
        match &self.inner.storage {
            Storage::Identity => 1.0,
            Storage::Diagonal(d) => {
                let max = d.iter().cloned().fold(f64::MIN, f64::max);
                let min = d.iter().cloned().fold(f64::MAX, f64::min);
                max / min
            }
            Storage::Dense(w) => {
                let s = thin_svd(w).expect("SPD weight has a finite SVD").sigma;
                s[0] / s[s.len() - 1]
            }
            Storage::Sparse(s) if s.dim() <= CONDITION_DENSE_LIMIT => {
                let e = nalgebra::SymmetricEigen::new(s.to_dense()).eigenvalues;
                let max = e.iter().cloned().fold(f64::MIN, f64::max);
                let min = e.iter().cloned().fold(f64::MAX, f64::min);
                max / min
            }
            Storage::Sparse(_) => {
                let m = self.dim();
                let lmax = lanczos_max(m, |x, y| self.mul_slice(x, y));
                let inv_max = lanczos_max(m, |x, y| {
                    let mut t = vec![0.0; m];
                    self.inner.factor.apply(FactorOp::LInv, x, &mut t);
                    self.inner.factor.apply(FactorOp::LtInv, &t, y);
                });
                lmax * inv_max
            }
        }
    }

    /// Same operator with `W` multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(DeimError::InvalidArgument(format!("scale must be positive, got {c}")));
        }
        match &self.inner.storage {
            Storage::Identity => Self::diagonal(vec![c; self.dim()]),
            Storage::Diagonal(d) => Self::diagonal(d.iter().map(|v| v * c).collect()),
            Storage::Dense(w) => Self::dense(w * c),
            Storage::Sparse(s) => {
                let sc = vec![c.sqrt(); self.dim()];
                Self::sparse(s.scaled(&sc, None))
            }
        }
    }
}

/// Sparse weights up to this dimension get an exact condition number from a
/// dense symmetric eigensolve.
pub const CONDITION_DENSE_LIMIT: usize = 2000;

const LANCZOS_STEPS: usize = 300;
const LANCZOS_TOL: f64 = 1e-10;

/// Largest eigenvalue of an SPD operator by Lanczos with full
/// reorthogonalization and a fixed start vector. Stops once the Ritz
/// residual `beta_k |s_k|` drops below `LANCZOS_TOL` relative.
fn lanczos_max(m: usize, op: impl Fn(&[f64], &mut [f64])) -> f64 {
    let steps = LANCZOS_STEPS.min(m);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(steps);
    let mut alpha = Vec::with_capacity(steps);
    let mut beta: Vec<f64> = Vec::with_capacity(steps);
    // Fixed pseudo-random start vector with mixed signs, so that it is not
    // nearly orthogonal to oscillatory eigenvectors.
    let mut state = 0x9e37_79b9_7f4a_7c15u64;
    let mut q: Vec<f64> = (0..m)
        .map(|_| {
            state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
            z ^= z >> 31;
            (z >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .collect();
    let nrm = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    q.iter_mut().for_each(|v| *v /= nrm);
    let mut w = vec![0.0; m];
    let mut estimate = 0.0;
    for k in 0..steps {
        op(&q, &mut w);
        let a: f64 = w.iter().zip(&q).map(|(x, y)| x * y).sum();
        alpha.push(a);
        basis.push(q.clone());
        for _ in 0..2 {
            for b in &basis {
                let c: f64 = w.iter().zip(b).map(|(x, y)| x * y).sum();
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let bn = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        if k % 5 == 4 || k + 1 == steps || bn == 0.0 {
            let (theta, last) = tridiagonal_max(&alpha, &beta);
            estimate = theta;
            if bn * last.abs() <= LANCZOS_TOL * theta {
                return theta;
            }
        }
        if bn == 0.0 {
            break;
        }
        beta.push(bn);
        q.iter_mut().zip(&w).for_each(|(x, y)| *x = y / bn);
    }
    log::warn!("Lanczos stopped after {steps} steps without meeting its tolerance");
    estimate
}

/// Largest eigenvalue of the Lanczos tridiagonal and the last component of
/// its eigenvector.
fn tridiagonal_max(alpha: &[f64], beta: &[f64]) -> (f64, f64) {
    let k = alpha.len();
    let t = Matrix::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let e = nalgebra::SymmetricEigen::new(t);
    let mut best = 0;
    for i in 1..k {
        if e.eigenvalues[i] > e.eigenvalues[best] {
            best = i;
        }
    }
    (e.eigenvalues[best], e.eigenvectors[(k - 1, best)])
}
