use super::sparse::SymSparse;
use crate::error::{DeimError, Result};
use crate::linalg::{cholesky, Matrix};

/// A factor `L` with `W = L L^T`.
#[derive(Debug, Clone)]
pub(crate) enum Factor {
    Identity,
    /// `L = diag(sqrt(w))`.
    Diagonal(Vec<f64>),
    /// Lower-triangular Cholesky factor.
    Dense(Matrix),
    /// `L = P L_s` for a fill-reducing permutation `P`.
    Skyline(Skyline),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum FactorOp {
    /// `L^T x`
    Lt,
    /// `L x`
    L,
    /// `L^{-T} x`
    LtInv,
    /// `L^{-1} x`
    LInv,
}

impl Factor {
    pub fn apply(&self, op: FactorOp, x: &[f64], out: &mut [f64]) {
        match self {
            Factor::Identity => out.copy_from_slice(x),
            Factor::Diagonal(d) => {
                let inv = matches!(op, FactorOp::LtInv | FactorOp::LInv);
                for ((o, &xi), &di) in out.iter_mut().zip(x).zip(d) {
                    *o = if inv { xi / di } else { xi * di };
                }
            }
            Factor::Dense(l) => dense_apply(l, op, x, out),
            Factor::Skyline(s) => s.apply(op, x, out),
        }
    }

    pub fn apply_matrix(&self, op: FactorOp, x: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(x.nrows(), x.ncols());
        if let Factor::Identity = self {
            out.copy_from(x);
            return out;
        }
        let m = x.nrows();
        let xs = x.as_slice();
        let os = out.as_mut_slice();
        for c in 0..x.ncols() {
            self.apply(op, &xs[c * m..(c + 1) * m], &mut os[c * m..(c + 1) * m]);
        }
        out
    }

    /// The factor `D L` for the diagonal `d`, which factors `D W D`.
    pub fn row_scaled(&self, d: &[f64]) -> Factor {
        match self {
            Factor::Identity => Factor::Diagonal(d.to_vec()),
            Factor::Diagonal(s) => Factor::Diagonal(s.iter().zip(d).map(|(a, b)| a * b).collect()),
            Factor::Dense(l) => {
                let mut l = l.clone();
                for (i, di) in d.iter().enumerate() {
                    l.row_mut(i).scale_mut(*di);
                }
                Factor::Dense(l)
            }
            Factor::Skyline(s) => {
                let mut s = s.clone();
                for a in 0..s.m {
                    let f = d[s.perm[a]];
                    let r = s.row_start[a]..s.row_start[a + 1];
                    s.vals[r].iter_mut().for_each(|v| *v *= f);
                }
                Factor::Skyline(s)
            }
        }
    }

    /// Triangular part and permutation as dense matrices: `P^T W P = T T^T`.
    pub fn triangular_dense(&self, m: usize) -> (Matrix, Vec<usize>) {
        match self {
            Factor::Identity => (Matrix::identity(m, m), (0..m).collect()),
            Factor::Diagonal(d) => (
                Matrix::from_diagonal(&nalgebra::DVector::from_column_slice(d)),
                (0..m).collect(),
            ),
            Factor::Dense(l) => (l.clone(), (0..m).collect()),
            Factor::Skyline(s) => {
                let mut t = Matrix::zeros(m, m);
                for a in 0..m {
                    for (k, &v) in s.row(a).iter().enumerate() {
                        t[(a, s.first[a] + k)] = v;
                    }
                }
                (t, s.perm.clone())
            }
        }
    }

    /// Largest distance from the diagonal to the first stored entry of a row.
    pub fn bandwidth(&self, m: usize) -> usize {
        match self {
            Factor::Identity | Factor::Diagonal(_) => 0,
            Factor::Dense(l) => {
                let mut bw = 0;
                for j in 0..m {
                    for i in j..m {
                        if l[(i, j)] != 0.0 {
                            bw = bw.max(i - j);
                        }
                    }
                }
                bw
            }
            Factor::Skyline(s) => (0..m).map(|a| a - s.first[a]).max().unwrap_or(0),
        }
    }
}

fn dense_apply(l: &Matrix, op: FactorOp, x: &[f64], out: &mut [f64]) {
    let m = l.nrows();
    let ls = l.as_slice();
    let at = |i: usize, j: usize| ls[j * m + i];
    match op {
        FactorOp::L => {
            out.iter_mut().for_each(|v| *v = 0.0);
            for j in 0..m {
                let xj = x[j];
                for i in j..m {
                    out[i] += at(i, j) * xj;
                }
            }
        }
        FactorOp::Lt => {
            for j in 0..m {
                let mut s = 0.0;
                for i in j..m {
                    s += at(i, j) * x[i];
                }
                out[j] = s;
            }
        }
        FactorOp::LInv => {
            out.copy_from_slice(x);
            for j in 0..m {
                let v = out[j] / at(j, j);
                out[j] = v;
                for i in j + 1..m {
                    out[i] -= at(i, j) * v;
                }
            }
        }
        FactorOp::LtInv => {
            out.copy_from_slice(x);
            for j in (0..m).rev() {
                let mut s = out[j];
                for i in j + 1..m {
                    s -= at(i, j) * out[i];
                }
                out[j] = s / at(j, j);
            }
        }
    }
}

/// Row-envelope Cholesky factor of `P^T W P`.
#[derive(Debug, Clone)]
pub(crate) struct Skyline {
    m: usize,
    /// `perm[a]` is the original index at position `a`.
    perm: Vec<usize>,
    /// First stored column of each row.
    first: Vec<usize>,
    row_start: Vec<usize>,
    vals: Vec<f64>,
}

impl Skyline {
    pub fn factorize(a: &SymSparse, perm: Vec<usize>) -> Result<Self> {
        let m = a.dim();
        let mut iperm = vec![0usize; m];
        for (k, &i) in perm.iter().enumerate() {
            iperm[i] = k;
        }
        let mut first: Vec<usize> = (0..m).collect();
        for c in 0..m {
            let b = iperm[c];
            for (r, _) in a.column(c) {
                let ar = iperm[r];
                if b <= ar {
                    first[ar] = first[ar].min(b);
                }
            }
        }
        let mut row_start = vec![0usize; m + 1];
        for r in 0..m {
            row_start[r + 1] = row_start[r] + (r - first[r] + 1);
        }
        let mut vals = vec![0.0; row_start[m]];
        for c in 0..m {
            let b = iperm[c];
            for (r, v) in a.column(c) {
                let ar = iperm[r];
                if b <= ar {
                    vals[row_start[ar] + b - first[ar]] = v;
                }
            }
        }

        for r in 0..m {
            let fr = first[r];
            for c in fr..r {
                let fc = first[c];
                let lo = fr.max(fc);
                let mut s = vals[row_start[r] + c - fr];
                let row_r = &vals[row_start[r] + lo - fr..row_start[r] + c - fr];
                let row_c = &vals[row_start[c] + lo - fc..row_start[c] + c - fc];
                for (x, y) in row_r.iter().zip(row_c) {
                    s -= x * y;
                }
                vals[row_start[r] + c - fr] = s / vals[row_start[c + 1] - 1];
            }
            let row = &vals[row_start[r]..row_start[r + 1] - 1];
            let d = vals[row_start[r + 1] - 1] - row.iter().map(|x| x * x).sum::<f64>();
            if !(d > 0.0) {
                return Err(DeimError::NotPositiveDefinite { pivot: r + 1 });
            }
            vals[row_start[r + 1] - 1] = d.sqrt();
        }
        Ok(Self {
            m,
            perm,
            first,
            row_start,
            vals,
        })
    }

    fn row(&self, a: usize) -> &[f64] {
        &self.vals[self.row_start[a]..self.row_start[a + 1]]
    }

    fn apply(&self, op: FactorOp, x: &[f64], out: &mut [f64]) {
        let m = self.m;
        let mut t = vec![0.0; m];
        match op {
            FactorOp::Lt => {
                // L^T x = L_s^T (P^T x)
                for a in 0..m {
                    let xa = x[self.perm[a]];
                    if xa == 0.0 {
                        continue;
                    }
                    let f = self.first[a];
                    for (k, v) in self.row(a).iter().enumerate() {
                        t[f + k] += v * xa;
                    }
                }
                out.copy_from_slice(&t);
            }
            FactorOp::L => {
                // L x = P (L_s x)
                for a in 0..m {
                    let f = self.first[a];
                    let s: f64 = self.row(a).iter().zip(&x[f..=a]).map(|(v, y)| v * y).sum();
                    out[self.perm[a]] = s;
                }
            }
            FactorOp::LInv => {
                // L^{-1} x = L_s^{-1} (P^T x)
                for a in 0..m {
                    let f = self.first[a];
                    let row = self.row(a);
                    let s: f64 = row[..a - f].iter().zip(&out[f..a]).map(|(v, y)| v * y).sum();
                    out[a] = (x[self.perm[a]] - s) / row[a - f];
                }
            }
            FactorOp::LtInv => {
                // L^{-T} x = P (L_s^{-T} x)
                t.copy_from_slice(x);
                for a in (0..m).rev() {
                    let f = self.first[a];
                    let row = self.row(a);
                    let ya = t[a] / row[a - f];
                    t[a] = ya;
                    for (k, v) in row[..a - f].iter().enumerate() {
                        t[f + k] -= v * ya;
                    }
                }
                for a in 0..m {
                    out[self.perm[a]] = t[a];
                }
            }
        }
    }
}

/// Dense factor through the kernel Cholesky, without pivoting.
pub(crate) fn dense_factor(w: &Matrix) -> Result<Factor> {
    Ok(Factor::Dense(cholesky(w, false)?.l))
}
