//! Plain-text formats.
//!
//! * Weights: `W <kind> <m>` followed by the entries. Diagonal weights list
//!   `m` values, dense weights `m * m` values in row-major order, sparse
//!   weights `i j value` triplets of the upper triangle with 1-based indices.
//!   Identity weights have no entries.
//! * Matrices (snapshots, bases): `Y <m> <n>` followed by the values in
//!   column-major order. A dense weight file is accepted as well.
//! * Selections: the single line `S <m> <s> : i1 ... is`, 1-based.
//! * Projectors: `DEIM <variant> <m> <r>`, the selection line and optional
//!   `basis <path>` and `weight <path>` references.
//!
//! Numbers are written with 17 significant digits, so every `f64` survives
//! a round trip bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::deim::{CanonicalStructure, DeimProjector, Variant};
use crate::error::{DeimError, Result};
use crate::linalg::Matrix;
use crate::selection::{format_selection_line, parse_selection_line};
use crate::weighting::{SymSparse, WeightKind, WeightOperator};

/// `x` with 17 significant digits, the format used by every writer here.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_err(line: usize, message: impl Into<String>) -> DeimError {
    DeimError::Parse {
        line,
        message: message.into(),
    }
}

/// Whitespace-separated tokens with their 1-based line numbers.
struct Tokens<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let items = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim_start().starts_with('#'))
            .flat_map(|(n, l)| l.split_whitespace().map(move |t| (n + 1, t)))
            .collect();
        Self { items, pos: 0 }
    }

    fn line(&self) -> usize {
        self.items
            .get(self.pos)
            .or_else(|| self.items.last())
            .map_or(1, |t| t.0)
    }

    fn next(&mut self, what: &str) -> Result<&'a str> {
        let line = self.line();
        let t = self
            .items
            .get(self.pos)
            .ok_or_else(|| parse_err(line, format!("unexpected end of input, expected {what}")))?;
        self.pos += 1;
        Ok(t.1)
    }

    fn usize(&mut self, what: &str) -> Result<usize> {
        let line = self.line();
        let t = self.next(what)?;
        t.parse().map_err(|_| parse_err(line, format!("bad {what} '{t}'")))
    }

    fn f64(&mut self) -> Result<f64> {
        let line = self.line();
        let t = self.next("a number")?;
        let v: f64 = t.parse().map_err(|_| parse_err(line, format!("bad number '{t}'")))?;
        if !v.is_finite() {
            return Err(parse_err(line, format!("non-finite value '{t}'")));
        }
        Ok(v)
    }

    fn finish(&self) -> Result<()> {
        if self.pos < self.items.len() {
            return Err(parse_err(self.line(), "trailing data"));
        }
        Ok(())
    }
}

pub fn format_weight(w: &WeightOperator) -> String {
    let m = w.dim();
    let mut out = format!("W {} {m}\n", w.kind());
    match w.kind() {
        WeightKind::Identity => {}
        WeightKind::Diagonal => {
            for d in w.diagonal_entries().unwrap() {
                out.push_str(&fmt_f64(*d));
                out.push('\n');
            }
        }
        WeightKind::Sparse => {
            for (i, j, v) in w.sparse_matrix().unwrap().upper_triplets() {
                let _ = writeln!(out, "{} {} {}", i + 1, j + 1, fmt_f64(v));
            }
        }
        WeightKind::Dense => {
            let d = w.to_dense();
            for i in 0..m {
                let row: Vec<String> = (0..m).map(|j| fmt_f64(d[(i, j)])).collect();
                out.push_str(&row.join(" "));
                out.push('\n');
            }
        }
    }
    out
}

pub fn parse_weight(text: &str) -> Result<WeightOperator> {
    let mut t = Tokens::new(text);
    if t.next("header")? != "W" {
        return Err(parse_err(t.line(), "weight file must start with 'W'"));
    }
    let kind = t.next("kind")?;
    let m = t.usize("dimension")?;
    let w = match kind {
        "identity" => WeightOperator::identity(m)?,
        "diagonal" => {
            let d = (0..m).map(|_| t.f64()).collect::<Result<Vec<_>>>()?;
            WeightOperator::diagonal(d)?
        }
        "dense" => {
            let vals = (0..m * m).map(|_| t.f64()).collect::<Result<Vec<_>>>()?;
            WeightOperator::dense(Matrix::from_row_slice(m, m, &vals))?
        }
        "sparse" => {
            let mut trip = Vec::new();
            while t.pos < t.items.len() {
                let line = t.line();
                let i = t.usize("row index")?;
                let j = t.usize("column index")?;
                let v = t.f64()?;
                if i == 0 || j == 0 || i > m || j > m {
                    return Err(parse_err(line, format!("index ({i}, {j}) outside 1..={m}")));
                }
                if i > j {
                    return Err(parse_err(line, "sparse weights list the upper triangle only"));
                }
                trip.push((i - 1, j - 1, v));
            }
            WeightOperator::sparse(SymSparse::from_triplets(m, trip, true)?)?
        }
        other => return Err(parse_err(1, format!("unknown weight kind '{other}'"))),
    };
    t.finish()?;
    Ok(w)
}

pub fn read_weight(path: impl AsRef<Path>) -> Result<WeightOperator> {
    parse_weight(&fs::read_to_string(path)?)
}

pub fn write_weight(path: impl AsRef<Path>, w: &WeightOperator) -> Result<()> {
    Ok(fs::write(path, format_weight(w))?)
}

/// `Y <m> <n>` and one line per column.
pub fn format_matrix(a: &Matrix) -> String {
    let mut out = format!("Y {} {}\n", a.nrows(), a.ncols());
    for col in a.column_iter() {
        let vals: Vec<String> = col.iter().map(|&x| fmt_f64(x)).collect();
        out.push_str(&vals.join(" "));
        out.push('\n');
    }
    out
}

/// Reads the matrix format, or a weight file as its dense matrix.
pub fn parse_matrix(text: &str) -> Result<Matrix> {
    let mut t = Tokens::new(text);
    match t.next("header")? {
        "Y" => {
            let m = t.usize("row count")?;
            let n = t.usize("column count")?;
            let vals = (0..m * n).map(|_| t.f64()).collect::<Result<Vec<_>>>()?;
            t.finish()?;
            Ok(Matrix::from_column_slice(m, n, &vals))
        }
        "W" => Ok(parse_weight(text)?.to_dense()),
        other => Err(parse_err(1, format!("expected 'Y' or 'W' header, found '{other}'"))),
    }
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<Matrix> {
    parse_matrix(&fs::read_to_string(path)?)
}

pub fn write_matrix(path: impl AsRef<Path>, a: &Matrix) -> Result<()> {
    Ok(fs::write(path, format_matrix(a))?)
}

/// Reads a selection file (its first non-comment line).
pub fn read_selection(path: impl AsRef<Path>) -> Result<(usize, Vec<usize>)> {
    let text = fs::read_to_string(path)?;
    let line = text
        .lines()
        .find(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .ok_or_else(|| parse_err(1, "empty selection file"))?;
    parse_selection_line(line.trim())
}

pub fn write_selection(path: impl AsRef<Path>, m: usize, indices: &[usize]) -> Result<()> {
    Ok(fs::write(path, format_selection_line(m, indices) + "\n")?)
}

/// A parsed projector file. The basis and weight are referenced by path.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorFile {
    pub variant: Variant,
    pub m: usize,
    pub r: usize,
    pub indices: Vec<usize>,
    pub basis: Option<String>,
    pub weight: Option<String>,
}

pub fn format_projector(d: &DeimProjector, basis: Option<&str>, weight: Option<&str>) -> String {
    let mut out = d.to_text();
    if let Some(b) = basis {
        let _ = writeln!(out, "basis {b}");
    }
    if let Some(w) = weight {
        let _ = writeln!(out, "weight {w}");
    }
    out
}

pub fn parse_projector(text: &str) -> Result<ProjectorFile> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let (n, head) = lines.next().ok_or_else(|| parse_err(1, "empty projector file"))?;
    let h: Vec<&str> = head.split_whitespace().collect();
    if h.len() != 4 || h[0] != "DEIM" {
        return Err(parse_err(n + 1, "expected 'DEIM <variant> <m> <r>'"));
    }
    let variant: Variant = h[1].parse()?;
    let m: usize = h[2].parse().map_err(|_| parse_err(n + 1, "bad dimension"))?;
    let r: usize = h[3].parse().map_err(|_| parse_err(n + 1, "bad rank"))?;
    let (n, sel) = lines.next().ok_or_else(|| parse_err(n + 2, "missing selection line"))?;
    let (sm, indices) = parse_selection_line(sel.trim()).map_err(|e| match e {
        DeimError::Parse { message, .. } => parse_err(n + 1, message),
        other => other,
    })?;
    if sm != m {
        return Err(parse_err(n + 1, format!("selection is for m = {sm}, projector for m = {m}")));
    }
    let mut file = ProjectorFile {
        variant,
        m,
        r,
        indices,
        basis: None,
        weight: None,
    };
    for (n, l) in lines {
        match l.trim().split_once(char::is_whitespace) {
            Some(("basis", p)) => file.basis = Some(p.trim().to_string()),
            Some(("weight", p)) => file.weight = Some(p.trim().to_string()),
            _ => return Err(parse_err(n + 1, format!("unrecognized line '{l}'"))),
        }
    }
    Ok(file)
}

pub fn read_projector(path: impl AsRef<Path>) -> Result<ProjectorFile> {
    parse_projector(&fs::read_to_string(path)?)
}

pub const DIAGNOSTICS_HEADER: &str = "variant,r,s,eta,kappa,error_constant,angles";

/// One CSV row of projector diagnostics. Angles are `;`-separated.
pub fn diagnostics_row(d: &DeimProjector, canonical: &CanonicalStructure) -> String {
    let eta = d.selection().eta().map(fmt_f64).unwrap_or_default();
    let angles: Vec<String> = canonical.all_angles.iter().map(|&a| fmt_f64(a)).collect();
    format!(
        "{},{},{},{},{},{},{}",
        d.variant(),
        d.rank(),
        d.samples(),
        eta,
        fmt_f64(d.kernel_inv_norm()),
        fmt_f64(d.error_constant()),
        angles.join(";")
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deim::{build_deim, canonical_analysis};
    use crate::selection::select_qdeim;

    fn round_trip(w: &WeightOperator) -> WeightOperator {
        parse_weight(&format_weight(w)).unwrap()
    }

    #[test]
    fn weight_round_trips_bit_exact() {
        let d = WeightOperator::diagonal(vec![0.1, 1.0 / 3.0, std::f64::consts::PI]).unwrap();
        assert_eq!(round_trip(&d).diagonal_entries(), d.diagonal_entries());

        let a = Matrix::from_fn(3, 3, |i, j| if i == j { 2.0 + 0.1 * i as f64 } else { 1.0 / 7.0 });
        let dense = WeightOperator::dense(a).unwrap();
        assert_eq!(round_trip(&dense).to_dense(), dense.to_dense());

        let s = WeightOperator::sparse_from_triplets(
            3,
            vec![(0, 0, 2.0), (1, 1, 2.0), (2, 2, 2.0), (0, 1, -1.0 / 3.0), (1, 0, -1.0 / 3.0)],
        )
        .unwrap();
        let back = round_trip(&s);
        assert_eq!(back.kind(), WeightKind::Sparse);
        assert_eq!(back.to_dense(), s.to_dense());

        let id = round_trip(&WeightOperator::identity(4).unwrap());
        assert!(id.is_identity() && id.dim() == 4);
    }

    #[test]
    fn weight_text_examples() {
        let w = parse_weight("W sparse 2\n1 1 4\n1 2 1\n2 2 3\n").unwrap();
        assert_eq!(w.to_dense(), Matrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]));
        assert!(parse_weight("W sparse 2\n2 1 1\n").is_err());
        assert!(parse_weight("W diagonal 2\n1\n").is_err());
        assert!(parse_weight("W diagonal 1\n1 2\n").is_err());
        assert!(parse_weight("W banded 2\n").is_err());
        assert!(matches!(parse_weight("W diagonal 2\n1\nx\n"), Err(DeimError::Parse { line: 3, .. })));
    }

    #[test]
    fn matrix_round_trip_and_weight_input() {
        let a = Matrix::from_fn(4, 3, |i, j| (i as f64 - 0.3 * j as f64).exp() / 3.0);
        assert_eq!(parse_matrix(&format_matrix(&a)).unwrap(), a);
        let w = parse_matrix("W dense 2\n1 2\n2 5\n").unwrap();
        assert_eq!(w, Matrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 5.0]));
        assert!(parse_matrix("Y 2 2\n1 2 3\n").is_err());
    }

    #[test]
    fn projector_text() {
        let u = Matrix::from_column_slice(3, 1, &[0.6, 0.8, 0.0]);
        let d = build_deim(&u, &select_qdeim(&u).unwrap()).unwrap();
        let text = format_projector(&d, Some("basis.txt"), None);
        assert_eq!(text, "DEIM unweighted 3 1\nS 3 1 : 2\nbasis basis.txt\n");
        let p = parse_projector(&text).unwrap();
        assert_eq!(p.variant, Variant::Unweighted);
        assert_eq!(p.indices, vec![1]);
        assert_eq!(p.basis.as_deref(), Some("basis.txt"));
        assert!(parse_projector("DEIM unweighted 4 1\nS 3 1 : 2\n").is_err());

        let c = canonical_analysis(&d).unwrap();
        let row = diagnostics_row(&d, &c);
        assert!(row.starts_with("unweighted,1,1,,1.2500000000000000e0,"));
    }
}
