//! Numerical experiments for `deimkit` and the `deimkit` command-line tool.
//!
//! Each `exampleN` module reproduces one experiment at desk scale and returns
//! an [`ErrorReport`]: CSV-ready tables plus a tally of inline error-bound
//! checks. [`run_example`] adds thread control and timing; [`cli`] wraps
//! everything in subcommands.
//!
//! ```no_run
//! use deimkit_experiments::{run_example, ExperimentConfig};
//!
//! let cfg = ExperimentConfig { small: true, ..ExperimentConfig::for_example(3) };
//! let report = run_example(&cfg).unwrap();
//! report.ensure_bounds().unwrap();
//! report.write(std::path::Path::new("results")).unwrap();
//! ```

use std::time::Instant;

use deimkit::linalg::Matrix;
use deimkit::WeightOperator;

pub mod cli;
pub mod config;
pub mod error;
pub mod example1;
pub mod example2;
pub mod example3;
pub mod example4;
pub mod example5;
pub mod fem;
pub mod lhs;
pub mod rc_ladder;
pub mod report;

pub use config::{ExperimentConfig, WeightChoice};
pub use error::{ExpError, Result};
pub use report::{ErrorReport, Table};

// The guide under `book/` is compiled as doctests so that its snippets stay in
// sync with both crates.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/weights.md")]
    mod weights {}
    #[doc = include_str!("../../../book/src/pod.md")]
    mod pod {}
    #[doc = include_str!("../../../book/src/selection.md")]
    mod selection {}
    #[doc = include_str!("../../../book/src/projectors.md")]
    mod projectors {}
    #[doc = include_str!("../../../book/src/canonical.md")]
    mod canonical {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}

/// Runs the configured example inside a pool sized by
/// [`ExperimentConfig::thread_count`]. Parallel sweeps merge in index order,
/// so the tables do not depend on the thread count.
pub fn run_example(cfg: &ExperimentConfig) -> Result<ErrorReport> {
    cfg.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cfg.thread_count()? {
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| ExpError::Config(format!("cannot start the worker pool: {e}")))?;
    let start = Instant::now();
    let mut report = pool.install(|| match cfg.example {
        1 => example1::run_example1(cfg),
        2 => example2::run_example2(cfg),
        3 => example3::run_example3(cfg),
        4 => example4::run_example4(cfg),
        _ => example5::run_example5(cfg),
    })?;
    report.wall_time = start.elapsed();
    Ok(report)
}

/// `||x_j||_W` for every column of `x`.
pub(crate) fn w_column_norms(w: &WeightOperator, x: &Matrix) -> Result<Vec<f64>> {
    let lx = w.lt_mul(x)?;
    Ok(lx.column_iter().map(|c| c.norm()).collect())
}
