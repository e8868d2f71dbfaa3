//! Example 2: W-POD-Galerkin reduction of the nonlinear RC ladder with a
//! W-DEIM approximation of the nonlinearity, `W = D`.

use deimkit::{deim, pod, selection, RankSpec, Strategy, WeightOperator};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::error::{ExpError, Result};
use crate::rc_ladder::{capacitances, relative_errors, solve_rc_ladder_full, LadderConfig, ReducedLadder};
use crate::report::{clamp_ranks, mean_max, num, BoundLedger, ErrorReport, Table};
use crate::w_column_norms;

#[derive(Debug, Clone, PartialEq)]
pub struct Example2Params {
    pub ladder: LadderConfig,
    /// Reduced dimensions; the state basis and the DEIM basis share each value.
    pub ranks: Vec<usize>,
    pub strategy: Strategy,
    pub eta: f64,
}

impl Example2Params {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        if cfg.weight.is_some() {
            return Err(ExpError::config("example 2 always weights with the capacitance matrix"));
        }
        let n = cfg.points.unwrap_or(if cfg.small { 100 } else { 1000 });
        let mut ladder = LadderConfig::new(n);
        if let Some(s) = cfg.train {
            ladder.snapshots = s;
        }
        Ok(Example2Params {
            ladder,
            ranks: cfg.ranks.clone().unwrap_or_else(|| (5..=40).step_by(5).collect()),
            strategy: cfg.strategy_or(Strategy::Srrqr),
            eta: cfg.eta,
        })
    }
}

struct Run {
    k: usize,
    relerr: Vec<f64>,
    first: Vec<f64>,
    constant: f64,
    ledger: BoundLedger,
}

pub fn run_example2(cfg: &ExperimentConfig) -> Result<ErrorReport> {
    let p = Example2Params::from_config(cfg)?;
    let full = solve_rc_ladder_full(&p.ladder)?;
    let n = p.ladder.n;
    let w = WeightOperator::diagonal(capacitances(n))?;
    let state_pod = pod::pod_basis(&full.states, &w, RankSpec::Explicit(1))?;
    let field_pod = pod::pod_basis(&full.nonlinear, &w, RankSpec::Explicit(1))?;
    let max_rank = state_pod.numerical_rank().min(field_pod.numerical_rank());

    let mut report = ErrorReport::new(2);
    let ranks = clamp_ranks(&p.ranks, max_rank, &mut report, "ladder");

    let field_norms = w_column_norms(&w, &full.nonlinear)?;
    let runs: Vec<Result<Run>> = ranks
        .par_iter()
        .map(|&k| {
            let v = state_pod.truncate(k)?.u_hat().clone();
            let basis = field_pod.truncate(k)?;
            let sel = selection::select(basis.u_euclid(), p.strategy, p.eta)?;
            let proj = deim::build_wdeim_generalized(&basis, &sel)?;
            let constant = proj.error_constant();

            // The interpolation bound on the training fields themselves.
            let h = &full.nonlinear;
            let err = w_column_norms(&w, &(h - proj.apply_matrix(h)?))?;
            let orth = w_column_norms(&w, &(h - basis.project_matrix(h)?))?;
            let mut ledger = BoundLedger::default();
            for j in 0..h.ncols() {
                ledger.check(|| format!("k={k} snapshot {j}"), err[j], constant, orth[j], field_norms[j]);
            }

            let reduced = ReducedLadder::new(&v, &proj)?;
            let xr = reduced.lift(&reduced.solve(&p.ladder)?);
            Ok(Run {
                k,
                relerr: relative_errors(&full.states, &xr),
                first: xr.row(0).iter().copied().collect(),
                constant,
                ledger,
            })
        })
        .collect();
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;

    let mut header = vec!["t".to_string()];
    header.extend(runs.iter().map(|r| format!("relerr_k{}", r.k)));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut errors = Table::new("example2_errors", &header);
    for (j, t) in full.times.iter().enumerate() {
        let mut row = vec![num(*t)];
        row.extend(runs.iter().map(|r| num(r.relerr[j])));
        errors.push(row);
    }

    let mut summary = Table::new("example2_summary", &["k", "max_relerr", "mean_relerr", "error_constant"]);
    for r in &runs {
        // t = 0 has x = 0 and carries no information.
        let (mean, max) = mean_max(&r.relerr[1..]);
        summary.push(vec![r.k.to_string(), num(max), num(mean), num(r.constant)]);
    }

    let best = runs.iter().max_by_key(|r| r.k).expect("validated non-empty");
    let mut first = Table::new("example2_first", &["t", "x1_full", "x1_reduced"]);
    for (j, t) in full.times.iter().enumerate() {
        first.push(vec![num(*t), num(full.states[(0, j)]), num(best.first[j])]);
    }

    report.note("n", n);
    report.note("snapshots", p.ladder.snapshots);
    report.note("t_end", num(p.ladder.t_end));
    report.note("integrator", "implicit Euler, Newton tolerance 1e-10, x(0) = 0");
    report.note("strategy", p.strategy);
    report.note("state_rank", state_pod.numerical_rank());
    report.note("field_rank", field_pod.numerical_rank());
    for r in runs {
        report.bounds.merge(r.ledger);
    }
    report.tables = vec![errors, summary, first];
    Ok(report)
}
