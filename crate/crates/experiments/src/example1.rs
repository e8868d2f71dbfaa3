//! Example 1: selection strategies compared on the damped oscillation
//! `f(t; mu) = 10 exp(-mu t) (cos 4 mu t + sin 4 mu t)`, Euclidean weight.

use std::f64::consts::PI;

use deimkit::linalg::Matrix;
use deimkit::{deim, pod, selection, RankSpec, Strategy, WeightOperator};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, WeightChoice};
use crate::error::{ExpError, Result};
use crate::lhs::linspace;
use crate::report::{clamp_ranks, mean_max, num, BoundLedger, ErrorReport, Table};

pub const STRATEGIES: [Strategy; 3] = [Strategy::DeimGreedy, Strategy::Qdeim, Strategy::Srrqr];

pub fn oscillation(t: f64, mu: f64) -> f64 {
    10.0 * (-mu * t).exp() * ((4.0 * mu * t).cos() + (4.0 * mu * t).sin())
}

/// One column per parameter value.
pub fn snapshots(times: &[f64], mus: &[f64]) -> Matrix {
    Matrix::from_fn(times.len(), mus.len(), |i, j| oscillation(times[i], mus[j]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example1Params {
    /// Time samples on `[1, 6]`.
    pub n_time: usize,
    /// Training parameters, evenly spaced on `[0, pi]`.
    pub n_train: usize,
    /// Test parameters, evenly spaced on `[0, pi]`.
    pub n_test: usize,
    /// Basis dimensions; the largest one gives the per-parameter table.
    pub sweep: Vec<usize>,
    pub eta: f64,
}

impl Example1Params {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        if cfg.weight.as_ref().is_some_and(|w| *w != WeightChoice::Identity) {
            return Err(ExpError::config("example 1 runs with the identity weight only"));
        }
        Ok(Example1Params {
            n_time: cfg.points.unwrap_or(10_000),
            n_train: cfg.train.unwrap_or(40),
            n_test: cfg.test.unwrap_or(200),
            sweep: cfg.ranks.clone().unwrap_or_else(|| (10..=34).step_by(4).collect()),
            eta: cfg.eta,
        })
    }
}

struct Run {
    relerr: Vec<f64>,
    kappa: f64,
    ledger: BoundLedger,
}

fn evaluate(u: &Matrix, strategy: Strategy, eta: f64, test: &Matrix) -> Result<Run> {
    let sel = selection::select(u, strategy, eta)?;
    let d = deim::build_deim(u, &sel)?;
    let df = d.apply_matrix(test)?;
    let pf = u * u.tr_mul(test);
    let kappa = d.error_constant();
    let mut ledger = BoundLedger::default();
    let mut relerr = Vec::with_capacity(test.ncols());
    for j in 0..test.ncols() {
        let f = test.column(j);
        let fnorm = f.norm();
        let err = (f - df.column(j)).norm();
        let orth = (f - pf.column(j)).norm();
        ledger.check(|| format!("{strategy} r={} test {j}", u.ncols()), err, kappa, orth, fnorm);
        relerr.push(if fnorm > 0.0 { err / fnorm } else { err });
    }
    Ok(Run { relerr, kappa, ledger })
}

pub fn run_example1(cfg: &ExperimentConfig) -> Result<ErrorReport> {
    let p = Example1Params::from_config(cfg)?;
    let times = linspace(1.0, 6.0, p.n_time);
    let train_mu = linspace(0.0, PI, p.n_train);
    let test_mu = linspace(0.0, PI, p.n_test);
    let y = snapshots(&times, &train_mu);
    let test = snapshots(&times, &test_mu);
    let basis = pod::pod_basis(&y, &WeightOperator::identity(p.n_time)?, RankSpec::Explicit(1))?;
    let max_rank = basis.numerical_rank();

    let mut report = ErrorReport::new(1);
    let sweep = clamp_ranks(&p.sweep, max_rank, &mut report, "time");
    let rank = *sweep.iter().max().expect("validated non-empty");

    let jobs: Vec<(usize, Strategy)> = sweep
        .iter()
        .flat_map(|&r| STRATEGIES.iter().map(move |&s| (r, s)))
        .collect();
    let runs: Vec<Result<Run>> = jobs
        .par_iter()
        .map(|&(r, s)| {
            let u = basis.truncate(r)?.u_hat().clone();
            evaluate(&u, s, p.eta, &test)
        })
        .collect();
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;

    let mut summary = Table::new(
        "example1_sweep",
        &["r", "maxrelerr_deim", "maxrelerr_qdeim", "maxrelerr_srrqr", "kappa_deim", "kappa_qdeim", "kappa_srrqr"],
    );
    for (chunk, &r) in runs.chunks(3).zip(&sweep) {
        let mut row = vec![r.to_string()];
        row.extend(chunk.iter().map(|run| num(mean_max(&run.relerr).1)));
        row.extend(chunk.iter().map(|run| num(run.kappa)));
        summary.push(row);
    }

    let last = sweep.iter().rposition(|&r| r == rank).expect("rank is in the sweep");
    let main = &runs[3 * last..3 * last + 3];
    let mut errors = Table::new(
        "example1_errors",
        &["mu", "relerr_deim", "relerr_qdeim", "relerr_srrqr", "kappa_deim", "kappa_qdeim", "kappa_srrqr"],
    );
    let mut ratios = Table::new("example1_ratios", &["mu", "ratio_qdeim_srrqr", "ratio_deim_srrqr"]);
    for (j, mu) in test_mu.iter().enumerate() {
        let mut row = vec![num(*mu)];
        row.extend(main.iter().map(|run| num(run.relerr[j])));
        row.extend(main.iter().map(|run| num(run.kappa)));
        errors.push(row);
        let s = main[2].relerr[j];
        ratios.push(vec![num(*mu), num(main[1].relerr[j] / s), num(main[0].relerr[j] / s)]);
    }

    for (s, run) in STRATEGIES.iter().zip(main) {
        report.note(&format!("kappa_{s}"), num(run.kappa));
    }
    report.note("time_points", p.n_time);
    report.note("train_mu", p.n_train);
    report.note("test_mu", p.n_test);
    report.note("rank", rank);
    report.note("numerical_rank", max_rank);
    report.note("eta", num(p.eta));
    report.note("srrqr_kappa_ceiling", num(deimkit::linalg::srrqr_bound(rank, p.n_time, p.eta)));
    for run in runs {
        report.bounds.merge(run.ledger);
    }
    report.tables = vec![errors, ratios, summary];
    Ok(report)
}
