//! Result tables, inline bound checks and CSV output.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use deimkit::io::fmt_f64;

use crate::error::{ExpError, Result};

/// A value rendered with 17 significant digits.
pub fn num(x: f64) -> String {
    fmt_f64(x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }

    /// Column `name` parsed as numbers.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.header.iter().position(|h| h == name)?;
        self.rows.iter().map(|r| r[c].parse().ok()).collect()
    }
}

/// Relative slack on every bound check, for roundoff in evaluating both sides.
pub const BOUND_RTOL: f64 = 1e-8;
/// Absolute slack, as a multiple of `constant * ||f||`.
pub const BOUND_ATOL: f64 = 1e-12;

/// Tally of `error <= constant * orthogonal error` checks.
#[derive(Debug, Clone, Default)]
pub struct BoundLedger {
    pub checked: usize,
    /// Largest `lhs / rhs` seen.
    pub worst_ratio: f64,
    pub violations: Vec<String>,
}

impl BoundLedger {
    /// Records `lhs <= constant * orth`, with `scale = ||f||` setting the
    /// absolute slack. Returns whether the check passed.
    pub fn check(&mut self, label: impl FnOnce() -> String, lhs: f64, constant: f64, orth: f64, scale: f64) -> bool {
        self.checked += 1;
        let rhs = constant * orth;
        if rhs > 0.0 {
            self.worst_ratio = self.worst_ratio.max(lhs / rhs);
        }
        let ok = lhs <= rhs * (1.0 + BOUND_RTOL) + BOUND_ATOL * constant * scale;
        if !ok {
            self.violations
                .push(format!("{}: {lhs:.6e} > {constant:.6e} * {orth:.6e}", label()));
        }
        ok
    }

    pub fn merge(&mut self, other: BoundLedger) {
        self.checked += other.checked;
        self.worst_ratio = self.worst_ratio.max(other.worst_ratio);
        self.violations.extend(other.violations);
    }
}

#[derive(Debug, Clone)]
pub struct ErrorReport {
    pub example: u8,
    pub tables: Vec<Table>,
    pub bounds: BoundLedger,
    /// `key = value` facts about the run: discretization, sizes, observed constants.
    pub notes: Vec<(String, String)>,
    pub wall_time: Duration,
}

impl ErrorReport {
    pub fn new(example: u8) -> Self {
        ErrorReport {
            example,
            tables: Vec::new(),
            bounds: BoundLedger::default(),
            notes: Vec::new(),
            wall_time: Duration::ZERO,
        }
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.notes.push((key.to_string(), value.to_string()));
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn ensure_bounds(&self) -> Result<()> {
        match self.bounds.violations.first() {
            None => Ok(()),
            Some(first) => Err(ExpError::BoundViolation {
                count: self.bounds.violations.len(),
                first: first.clone(),
            }),
        }
    }

    /// Writes `<name>.csv` for every table and `example<N>_meta.txt` with the
    /// notes. Wall time goes to neither, so reruns are byte-identical.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|source| ExpError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let mut written = Vec::new();
        for t in &self.tables {
            let path = dir.join(format!("{}.csv", t.name));
            write_file(&path, &t.to_csv())?;
            written.push(path);
        }
        let mut meta = String::new();
        for (k, v) in &self.notes {
            let _ = writeln!(meta, "{k} = {v}");
        }
        let _ = writeln!(meta, "bound_checks = {}", self.bounds.checked);
        let _ = writeln!(meta, "bound_violations = {}", self.bounds.violations.len());
        let _ = writeln!(meta, "worst_bound_ratio = {}", num(self.bounds.worst_ratio));
        let path = dir.join(format!("example{}_meta.txt", self.example));
        write_file(&path, &meta)?;
        written.push(path);
        Ok(written)
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| ExpError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Mean and maximum of a non-empty slice.
pub fn mean_max(v: &[f64]) -> (f64, f64) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let max = v.iter().cloned().fold(f64::MIN, f64::max);
    (mean, max)
}

/// Caps every rank at `max_rank` and drops the duplicates this creates.
pub(crate) fn clamp_ranks(ranks: &[usize], max_rank: usize, report: &mut ErrorReport, label: &str) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::with_capacity(ranks.len());
    for &r in ranks {
        let r = if r > max_rank {
            log::warn!("{label}: rank {r} exceeds the snapshot rank {max_rank}; using {max_rank}");
            report.note("rank_clamped", format!("{label} {r} -> {max_rank}"));
            max_rank
        } else {
            r
        };
        if !out.contains(&r) {
            out.push(r);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_carry_17_significant_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(1.0 / 3.0).parse::<f64>().unwrap(), 1.0 / 3.0);
    }

    #[test]
    fn csv_uses_lf_and_header() {
        let mut t = Table::new("t", &["a", "b"]);
        t.push(vec![num(1.0), num(2.0)]);
        let s = t.to_csv();
        assert!(s.starts_with("a,b\n"));
        assert!(!s.contains('\r'));
        assert_eq!(t.column("b").unwrap(), vec![2.0]);
    }

    #[test]
    fn ledger_flags_violations() {
        let mut l = BoundLedger::default();
        assert!(l.check(|| "ok".into(), 1.0, 2.0, 0.5, 1.0));
        assert!(!l.check(|| "bad".into(), 1.1, 2.0, 0.5, 1.0));
        assert_eq!(l.checked, 2);
        assert_eq!(l.violations.len(), 1);
        assert!((l.worst_ratio - 1.1).abs() < 1e-15);
    }
}
