//! Experiment configuration: defaults per example, `key = value` files and
//! validation.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use deimkit::selection::DEFAULT_ETA;
use deimkit::{Strategy, WeightOperator};

use crate::error::{ExpError, Result};
use crate::fem;

/// Where a weight comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WeightChoice {
    Identity,
    /// The bilinear FE mass matrix on a square grid.
    Mass,
    /// The FE mass plus stiffness matrix on a square grid.
    H1,
    File(PathBuf),
}

impl WeightChoice {
    /// The operator of dimension `m`. The FE weights need `m` to be a perfect
    /// square.
    pub fn resolve(&self, m: usize) -> Result<WeightOperator> {
        match self {
            WeightChoice::Identity => Ok(WeightOperator::identity(m)?),
            WeightChoice::Mass | WeightChoice::H1 => {
                let n = (m as f64).sqrt().round() as usize;
                if n * n != m {
                    return Err(ExpError::config(format!(
                        "the {self} weight needs a square grid, but m = {m} is not a perfect square"
                    )));
                }
                let (mass, h1) = fem::build_fem_weights(n)?;
                Ok(if *self == WeightChoice::Mass { mass } else { h1 })
            }
            WeightChoice::File(p) => {
                let w = deimkit::io::read_weight(p)?;
                if w.dim() != m {
                    return Err(ExpError::config(format!(
                        "weight {} has dimension {}, expected {m}",
                        p.display(),
                        w.dim()
                    )));
                }
                Ok(w)
            }
        }
    }
}

impl fmt::Display for WeightChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightChoice::Identity => f.write_str("identity"),
            WeightChoice::Mass => f.write_str("mass"),
            WeightChoice::H1 => f.write_str("h1"),
            WeightChoice::File(p) => write!(f, "{}", p.display()),
        }
    }
}

impl FromStr for WeightChoice {
    type Err = ExpError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "" => Err(ExpError::config("empty weight")),
            "identity" | "I" => Ok(WeightChoice::Identity),
            "mass" | "l2" => Ok(WeightChoice::Mass),
            "h1" => Ok(WeightChoice::H1),
            other => Ok(WeightChoice::File(PathBuf::from(other))),
        }
    }
}

/// Settings shared by all examples. `None` fields take the example's default;
/// see each `run_exampleN` for what `points`, `train` and `test` mean there.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub example: u8,
    pub points: Option<usize>,
    pub train: Option<usize>,
    pub test: Option<usize>,
    /// Basis dimensions to sweep.
    pub ranks: Option<Vec<usize>>,
    /// Dimension of the interpolation basis where it differs from the sweep.
    pub deim_rank: Option<usize>,
    pub strategy: Option<Strategy>,
    pub eta: f64,
    pub weight: Option<WeightChoice>,
    pub seed: u64,
    pub out: PathBuf,
    pub small: bool,
    pub paper_scale: bool,
    /// Worker threads; falls back to `DEIMKIT_THREADS`, then to rayon's default.
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            example: 1,
            points: None,
            train: None,
            test: None,
            ranks: None,
            deim_rank: None,
            strategy: None,
            eta: DEFAULT_ETA,
            weight: None,
            seed: 0,
            out: PathBuf::from("."),
            small: false,
            paper_scale: false,
            threads: None,
        }
    }
}

impl ExperimentConfig {
    pub fn for_example(example: u8) -> Self {
        ExperimentConfig {
            example,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=5).contains(&self.example) {
            return Err(ExpError::config(format!("example must be 1..5, got {}", self.example)));
        }
        for (name, v) in [
            ("points", self.points),
            ("train", self.train),
            ("test", self.test),
            ("deim_rank", self.deim_rank),
            ("threads", self.threads),
        ] {
            if v == Some(0) {
                return Err(ExpError::config(format!("{name} must be at least 1")));
            }
        }
        if let Some(r) = &self.ranks {
            if r.is_empty() || r.contains(&0) {
                return Err(ExpError::config("ranks must be a non-empty list of positive integers"));
            }
        }
        if !(self.eta >= 1.0) || !self.eta.is_finite() {
            return Err(ExpError::config(format!("eta must be a finite number >= 1, got {}", self.eta)));
        }
        if self.small && self.paper_scale {
            return Err(ExpError::config("--small and --paper-scale are mutually exclusive"));
        }
        Ok(())
    }

    /// Applies `key = value` pairs. Unknown keys are rejected.
    pub fn apply_pairs(&mut self, pairs: &[(String, String)]) -> Result<()> {
        for (k, v) in pairs {
            let bad = |e: String| ExpError::config(format!("{k} = {v}: {e}"));
            match k.as_str() {
                "example" => self.example = v.parse().map_err(|e| bad(format!("{e}")))?,
                "points" => self.points = Some(parse_count(v).map_err(bad)?),
                "train" => self.train = Some(parse_count(v).map_err(bad)?),
                "test" => self.test = Some(parse_count(v).map_err(bad)?),
                "ranks" => self.ranks = Some(parse_list(v).map_err(bad)?),
                "deim_rank" => self.deim_rank = Some(parse_count(v).map_err(bad)?),
                "strategy" => self.strategy = Some(v.parse().map_err(|e| bad(format!("{e}")))?),
                "eta" => self.eta = v.parse().map_err(|e| bad(format!("{e}")))?,
                "weight" => self.weight = Some(v.parse()?),
                "seed" => self.seed = v.parse().map_err(|e| bad(format!("{e}")))?,
                "out" => self.out = PathBuf::from(v),
                "small" => self.small = parse_bool(v).map_err(bad)?,
                "paper_scale" => self.paper_scale = parse_bool(v).map_err(bad)?,
                "threads" => self.threads = Some(parse_count(v).map_err(bad)?),
                "format" if v == "csv" => {}
                "format" => return Err(bad("only csv output is supported".into())),
                _ => return Err(ExpError::config(format!("unknown configuration key '{k}'"))),
            }
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|source| ExpError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.apply_pairs(&parse_pairs(&text)?)
    }

    pub fn strategy_or(&self, default: Strategy) -> Strategy {
        self.strategy.unwrap_or(default)
    }

    /// Worker count for the parallel sweeps.
    pub fn thread_count(&self) -> Result<Option<usize>> {
        if let Some(t) = self.threads {
            return Ok(Some(t));
        }
        match std::env::var("DEIMKIT_THREADS") {
            Ok(s) => match s.trim().parse::<usize>() {
                Ok(n) if n >= 1 => Ok(Some(n)),
                _ => Err(ExpError::config(format!("DEIMKIT_THREADS must be a positive integer, got '{s}'"))),
            },
            Err(_) => Ok(None),
        }
    }
}

/// `key = value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| ExpError::config(format!("line {}: expected 'key = value'", n + 1)))?;
        out.push((k.trim().replace('-', "_"), v.trim().to_string()));
    }
    Ok(out)
}

fn parse_count(v: &str) -> std::result::Result<usize, String> {
    v.parse::<usize>().map_err(|e| e.to_string())
}

fn parse_bool(v: &str) -> std::result::Result<bool, String> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err("expected true or false".into()),
    }
}

/// A comma-separated list whose items are integers or inclusive ranges
/// `a..b` / `a..b:step`.
pub fn parse_list(v: &str) -> std::result::Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for item in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some((a, rest)) = item.split_once("..") {
            let (b, step) = match rest.split_once(':') {
                Some((b, s)) => (b, s.trim().parse::<usize>().map_err(|e| e.to_string())?),
                None => (rest, 1),
            };
            let a: usize = a.trim().parse().map_err(|e: std::num::ParseIntError| e.to_string())?;
            let b: usize = b.trim().parse().map_err(|e: std::num::ParseIntError| e.to_string())?;
            if step == 0 || b < a {
                return Err(format!("bad range '{item}'"));
            }
            out.extend((a..=b).step_by(step));
        } else {
            out.push(item.parse().map_err(|e: std::num::ParseIntError| e.to_string())?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_and_lists() {
        let text = "# sweep\nranks = 5..20:5, 34\nstrategy = qdeim\npaper-scale = false\n\nseed=7";
        let mut cfg = ExperimentConfig::for_example(3);
        cfg.apply_pairs(&parse_pairs(text).unwrap()).unwrap();
        assert_eq!(cfg.ranks, Some(vec![5, 10, 15, 20, 34]));
        assert_eq!(cfg.strategy, Some(Strategy::Qdeim));
        assert_eq!(cfg.seed, 7);
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_bad_input() {
        let mut cfg = ExperimentConfig::default();
        assert!(cfg.apply_pairs(&[("colour".into(), "red".into())]).is_err());
        assert!(parse_pairs("no equals sign").is_err());
        cfg.eta = 0.5;
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig {
            ranks: Some(vec![]),
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig {
            example: 6,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn weight_choices() {
        assert_eq!("h1".parse::<WeightChoice>().unwrap(), WeightChoice::H1);
        assert_eq!(
            "w.txt".parse::<WeightChoice>().unwrap(),
            WeightChoice::File(PathBuf::from("w.txt"))
        );
        assert!(WeightChoice::Mass.resolve(10).is_err());
        assert_eq!(WeightChoice::Mass.resolve(9).unwrap().dim(), 9);
    }
}
