//! Interpolation index selection.
//!
//! Every strategy takes a basis `U` with orthonormal columns and returns
//! row indices `i_1, ..., i_s` (the columns of the identity that make up
//! `S`). The error constant `kappa = ||(S^T U)^+||_2` is evaluated at build
//! time and stored.
//!
//! Indices are 0-based in the API and 1-based in the text format.

use std::fmt;
use std::str::FromStr;

use crate::error::{DeimError, Result};
use crate::linalg::{
    argmax_abs, ensure_finite, ensure_orthonormal, qr_column_pivoted, select_rows, singular_values,
    srrqr, srrqr_bound, Matrix, PINV_RCOND,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    DeimGreedy,
    Qdeim,
    Srrqr,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::DeimGreedy => "deim",
            Strategy::Qdeim => "qdeim",
            Strategy::Srrqr => "srrqr",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = DeimError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "deim" | "greedy" => Ok(Strategy::DeimGreedy),
            "qdeim" | "q-deim" => Ok(Strategy::Qdeim),
            "srrqr" => Ok(Strategy::Srrqr),
            other => Err(DeimError::InvalidArgument(format!("unknown strategy '{other}'"))),
        }
    }
}

/// Default tuning parameter for strong RRQR.
pub const DEFAULT_ETA: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionOperator {
    indices: Vec<usize>,
    m: usize,
    rank: usize,
    strategy: Strategy,
    eta: Option<f64>,
    kappa: f64,
}

impl SelectionOperator {
    /// Wraps explicit indices for the basis `u`, evaluating `kappa`.
    pub fn from_indices(
        u: &Matrix,
        indices: Vec<usize>,
        strategy: Strategy,
        eta: Option<f64>,
    ) -> Result<Self> {
        let m = u.nrows();
        let mut seen = vec![false; m];
        for &i in &indices {
            if i >= m {
                return Err(DeimError::InvalidArgument(format!(
                    "index {} outside 1..={m}",
                    i + 1
                )));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(DeimError::InvalidArgument(format!("index {} repeated", i + 1)));
            }
        }
        if indices.is_empty() {
            return Err(DeimError::InvalidArgument("empty selection".into()));
        }
        let kappa = pinv_norm(&select_rows(u, &indices))?;
        Ok(Self {
            indices,
            m,
            rank: u.ncols(),
            strategy,
            eta,
            kappa,
        })
    }

    /// 0-based row indices in selection order.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Number of selected indices `s`.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    /// Number of columns of the basis the selection was made for.
    pub fn basis_rank(&self) -> usize {
        self.rank
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn eta(&self) -> Option<f64> {
        self.eta
    }

    /// `||(S^T U)^+||_2` for the basis the selection was built from.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// `S^T X`.
    pub fn sample(&self, x: &Matrix) -> Matrix {
        select_rows(x, &self.indices)
    }

    /// Text form `S <m> <s> : i1 ... is` with 1-based indices.
    pub fn to_line(&self) -> String {
        format_selection_line(self.m, &self.indices)
    }

    /// `sqrt(1 + eta^2 r (m - r))` for this selection's shape, if it came
    /// from strong RRQR.
    pub fn lemma_bound(&self) -> Option<f64> {
        self.eta.map(|eta| srrqr_bound(self.rank, self.m, eta))
    }
}

impl fmt::Display for SelectionOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_line())
    }
}

pub fn format_selection_line(m: usize, indices: &[usize]) -> String {
    let mut s = format!("S {m} {} :", indices.len());
    for i in indices {
        s.push(' ');
        s.push_str(&(i + 1).to_string());
    }
    s
}

/// Parses `S <m> <s> : i1 ... is` into `m` and 0-based indices.
pub fn parse_selection_line(line: &str) -> Result<(usize, Vec<usize>)> {
    let bad = |msg: &str| DeimError::Parse {
        line: 1,
        message: msg.to_string(),
    };
    let (head, tail) = line.split_once(':').ok_or_else(|| bad("missing ':'"))?;
    let mut h = head.split_whitespace();
    if h.next() != Some("S") {
        return Err(bad("selection line must start with 'S'"));
    }
    let m: usize = h.next().and_then(|t| t.parse().ok()).ok_or_else(|| bad("bad dimension"))?;
    let s: usize = h.next().and_then(|t| t.parse().ok()).ok_or_else(|| bad("bad count"))?;
    let idx: Vec<usize> = tail
        .split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|_| bad("bad index")))
        .collect::<Result<_>>()?;
    if idx.len() != s {
        return Err(bad(&format!("expected {s} indices, found {}", idx.len())));
    }
    if idx.iter().any(|&i| i == 0 || i > m) {
        return Err(bad("index outside 1..=m"));
    }
    Ok((m, idx.into_iter().map(|i| i - 1).collect()))
}

/// `||A^+||_2 = 1 / sigma_min(A)` over the `min(rows, cols)` singular values.
pub(crate) fn pinv_norm(a: &Matrix) -> Result<f64> {
    let s = singular_values(a)?;
    let smin = *s.last().unwrap();
    if !(smin > PINV_RCOND * s[0]) {
        return Err(DeimError::RankDeficient {
            sigma_min: smin,
            sigma_max: s[0],
        });
    }
    Ok(1.0 / smin)
}

fn check_basis(u: &Matrix) -> Result<()> {
    ensure_finite(u)?;
    if u.ncols() > u.nrows() {
        return Err(DeimError::InvalidArgument(format!(
            "basis has more columns ({}) than rows ({})",
            u.ncols(),
            u.nrows()
        )));
    }
    ensure_orthonormal(u)
}

/// Classic residual-greedy DEIM.
pub fn select_deim_greedy(u: &Matrix) -> Result<SelectionOperator> {
    check_basis(u)?;
    let r = u.ncols();
    let mut idx = vec![argmax_abs(u.column(0).iter().copied()).unwrap()];
    for j in 1..r {
        let basis = u.columns(0, j).into_owned();
        let target = u.column(j).into_owned();
        let a = select_rows(&basis, &idx);
        let b = Matrix::from_iterator(j, 1, idx.iter().map(|&i| target[i]));
        let c = a.lu().solve(&b).ok_or(DeimError::RankDeficient {
            sigma_min: 0.0,
            sigma_max: 1.0,
        })?;
        let res = target - basis * c;
        let next = argmax_abs(res.iter().copied()).unwrap();
        if idx.contains(&next) {
            return Err(DeimError::RankDeficient {
                sigma_min: res.amax(),
                sigma_max: 1.0,
            });
        }
        idx.push(next);
    }
    SelectionOperator::from_indices(u, idx, Strategy::DeimGreedy, None)
}

/// Q-DEIM: the leading pivots of Businger–Golub QR on `U^T`.
pub fn select_qdeim(u: &Matrix) -> Result<SelectionOperator> {
    check_basis(u)?;
    let qr = qr_column_pivoted(&u.transpose())?;
    SelectionOperator::from_indices(u, qr.perm[..u.ncols()].to_vec(), Strategy::Qdeim, None)
}

/// Strong RRQR on `U^T`. The stored `kappa` is checked against
/// `sqrt(1 + eta^2 r (m - r))` and a violation is an error.
pub fn select_srrqr(u: &Matrix, eta: f64) -> Result<SelectionOperator> {
    check_basis(u)?;
    let r = u.ncols();
    let res = srrqr(&u.transpose(), r, eta)?;
    let sel = SelectionOperator::from_indices(u, res.perm()[..r].to_vec(), Strategy::Srrqr, Some(eta))?;
    let bound = srrqr_bound(r, u.nrows(), eta);
    // Roundoff allowance only; the inequality is exact in exact arithmetic.
    if sel.kappa > bound * (1.0 + 1e-10) {
        return Err(DeimError::BoundViolation {
            what: "||(S^T U)^{-1}||_2",
            value: sel.kappa,
            bound,
        });
    }
    Ok(sel)
}

/// Dispatches on `strategy`; `eta` is used only by strong RRQR.
pub fn select(u: &Matrix, strategy: Strategy, eta: f64) -> Result<SelectionOperator> {
    match strategy {
        Strategy::DeimGreedy => select_deim_greedy(u),
        Strategy::Qdeim => select_qdeim(u),
        Strategy::Srrqr => select_srrqr(u, eta),
    }
}

/// `s >= r` indices: the `r` indices of `base`, then one index at a time the
/// row that maximizes `sigma_min(S^T U)` (lowest index on ties).
pub fn select_oversampled(u: &Matrix, s: usize, base: Strategy, eta: f64) -> Result<SelectionOperator> {
    let (m, r) = u.shape();
    if s > m {
        return Err(DeimError::InvalidArgument(format!(
            "cannot select {s} indices from {m} rows"
        )));
    }
    if s < r {
        return Err(DeimError::InvalidArgument(format!(
            "oversampling needs s >= r, got s = {s} < r = {r}"
        )));
    }
    let first = select(u, base, eta)?;
    let mut idx = first.indices.clone();
    let mut chosen = vec![false; m];
    for &i in &idx {
        chosen[i] = true;
    }
    let sel_rows = select_rows(u, &idx);
    let mut gram = sel_rows.tr_mul(&sel_rows);
    while idx.len() < s {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..m {
            if chosen[i] {
                continue;
            }
            let row = u.row(i);
            let g = &gram + row.transpose() * row;
            let lmin = nalgebra::SymmetricEigen::new(g)
                .eigenvalues
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            if best.is_none_or(|(_, b)| lmin > b) {
                best = Some((i, lmin));
            }
        }
        let (i, _) = best.expect("s <= m leaves a candidate");
        let row = u.row(i);
        gram += row.transpose() * row;
        chosen[i] = true;
        idx.push(i);
    }
    SelectionOperator::from_indices(u, idx, base, first.eta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(x: &[f64]) -> Matrix {
        Matrix::from_column_slice(x.len(), 1, x)
    }

    #[test]
    fn greedy_examples() {
        assert_eq!(select_deim_greedy(&col(&[0.0, 1.0, 0.0])).unwrap().indices(), &[1]);
        let s = select_deim_greedy(&col(&[0.6, 0.8, 0.0])).unwrap();
        assert_eq!(s.indices(), &[1]);
        assert!((s.kappa() - 1.25).abs() < 1e-14);
        let s = select_deim_greedy(&Matrix::identity(4, 2)).unwrap();
        assert_eq!(s.indices(), &[0, 1]);
        assert_eq!(s.kappa(), 1.0);
    }

    #[test]
    fn qdeim_examples() {
        let mut p = Matrix::zeros(5, 2);
        p[(3, 0)] = 1.0;
        p[(1, 1)] = 1.0;
        let s = select_qdeim(&p).unwrap();
        // Rows 1 and 3 tie on norm; the lower index goes first.
        assert_eq!(s.indices(), &[1, 3]);
        assert_eq!(s.kappa(), 1.0);
        assert_eq!(select_qdeim(&col(&[0.6, 0.8, 0.0])).unwrap().indices(), &[1]);
    }

    #[test]
    fn srrqr_examples() {
        let s = select_srrqr(&Matrix::identity(3, 3), 2.0).unwrap();
        assert_eq!(s.kappa(), 1.0);
        let s = select_srrqr(&col(&[0.6, 0.8, 0.0]), 2.0).unwrap();
        assert_eq!(s.indices(), &[1]);
        assert!((s.kappa() - 1.25).abs() < 1e-14);
        assert_eq!(s.lemma_bound().unwrap(), 3.0);
    }

    #[test]
    fn oversampling_example() {
        let u = col(&[0.6, 0.8, 0.0]);
        let s = select_oversampled(&u, 2, Strategy::Srrqr, 2.0).unwrap();
        assert_eq!(s.indices(), &[1, 0]);
        assert!((s.kappa() - 1.0).abs() < 1e-14);
        let same = select_oversampled(&u, 1, Strategy::Qdeim, 2.0).unwrap();
        assert_eq!(same, select_qdeim(&u).unwrap());
        assert!(select_oversampled(&u, 4, Strategy::Qdeim, 2.0).is_err());
    }

    #[test]
    fn text_round_trip() {
        let s = select_qdeim(&col(&[0.6, 0.8, 0.0])).unwrap();
        assert_eq!(s.to_line(), "S 3 1 : 2");
        assert_eq!(parse_selection_line("S 3 1 : 2").unwrap(), (3, vec![1]));
        assert!(parse_selection_line("S 3 2 : 2").is_err());
        assert!(parse_selection_line("S 3 1 : 4").is_err());
    }

    #[test]
    fn rejects_non_orthonormal_basis() {
        assert!(matches!(
            select_qdeim(&col(&[1.0, 1.0])),
            Err(DeimError::NotOrthonormal { .. })
        ));
    }
}
