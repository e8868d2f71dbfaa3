//! Example 4: the three W-DEIM constructions compared on the Example 3 data.
//!
//! * generalized: selection on `L^T U_hat`, constant `||(S^T L^T U_hat)^{-1}||`;
//! * pointwise: selection on the orthonormal factor `Q` of `U_hat`, constant
//!   `sqrt(kappa(W)) ||(S^T Q)^{-1}||`;
//! * scaled pointwise: selection on the orthonormal factor of `Delta U_hat`,
//!   constant `sqrt(kappa(W_s)) ||(S^T Q)^{-1}||`.

use deimkit::{deim, pod, selection, PodBasis, RankSpec, Strategy, Variant};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, WeightChoice};
use crate::error::Result;
use crate::example3::{evaluate, Cell, CornerParams, CornerSetup};
use crate::report::{clamp_ranks, mean_max, num, ErrorReport, Table};
use crate::w_column_norms;

pub const METHODS: [Variant; 3] = [Variant::GeneralizedW, Variant::PointwiseW, Variant::ScaledPointwiseW];

struct MethodRun {
    cell: Cell,
    constant: f64,
    indices: Vec<usize>,
}

fn build(variant: Variant, basis: &PodBasis, strategy: Strategy, eta: f64) -> Result<deimkit::DeimProjector> {
    Ok(match variant {
        Variant::PointwiseW => deim::build_wdeim_pointwise_from_basis(basis, strategy, eta)?,
        Variant::ScaledPointwiseW => deim::build_wdeim_scaled_from_basis(basis, strategy, eta)?,
        _ => {
            let sel = selection::select(basis.u_euclid(), strategy, eta)?;
            deim::build_wdeim_generalized(basis, &sel)?
        }
    })
}

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v
}

pub fn run_example4(cfg: &ExperimentConfig) -> Result<ErrorReport> {
    let p = CornerParams::from_config(cfg);
    let setup = CornerSetup::new(p.grid_n, p.train_side, p.test_side)?;
    let choices = match &cfg.weight {
        Some(w) => vec![w.clone()],
        None => vec![WeightChoice::Mass, WeightChoice::H1],
    };

    let mut report = ErrorReport::new(4);
    let mut errors = Table::new(
        "example4_errors",
        &["weight", "method", "r", "mu1", "mu2", "relerr_w", "orth_relerr_w"],
    );
    let mut summary = Table::new(
        "example4_summary",
        &[
            "weight",
            "method",
            "r",
            "mean_relerr",
            "max_relerr",
            "constant",
            "kappa_w",
            "kappa_ws",
            "same_selection",
        ],
    );
    for choice in &choices {
        let w = setup.weight(choice)?;
        let name = choice.to_string();
        let kappa_w = w.condition_estimate();
        let kappa_ws = w.equilibrate().ws.condition_estimate();
        let pod = pod::pod_basis(&setup.train, &w, RankSpec::Explicit(1))?;
        let ranks = clamp_ranks(&p.ranks, pod.numerical_rank(), &mut report, &name);
        let norms = w_column_norms(&w, &setup.test)?;
        let jobs: Vec<(usize, Variant)> = ranks
            .iter()
            .flat_map(|&r| METHODS.iter().map(move |&v| (r, v)))
            .collect();
        let runs: Vec<Result<MethodRun>> = jobs
            .par_iter()
            .map(|&(r, v)| {
                let basis = pod.truncate(r)?;
                let d = build(v, &basis, p.strategy, p.eta)?;
                Ok(MethodRun {
                    cell: evaluate(&format!("{name} {v} r={r}"), &d, &basis, &setup.test, &norms)?,
                    constant: d.error_constant(),
                    indices: sorted(d.selection().indices().to_vec()),
                })
            })
            .collect();
        let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;

        for (chunk, &r) in runs.chunks(3).zip(&ranks) {
            let same = chunk[1].indices == chunk[2].indices;
            // With matching selections and kappa(W_s) <= kappa(W) the scaled
            // constant should not exceed the pointwise one.
            if same && kappa_ws <= kappa_w {
                report.bounds.check(
                    || format!("{name} r={r}: scaled constant vs pointwise constant"),
                    chunk[2].constant,
                    1.0,
                    chunk[1].constant,
                    0.0,
                );
            }
            for (run, v) in chunk.iter().zip(METHODS) {
                for (j, &(m1, m2)) in setup.test_mu.iter().enumerate() {
                    errors.push(vec![
                        name.clone(),
                        v.to_string(),
                        r.to_string(),
                        num(m1),
                        num(m2),
                        num(run.cell.relerr_w[j]),
                        num(run.cell.orth_relerr_w[j]),
                    ]);
                }
                let (mean, max) = mean_max(&run.cell.relerr_w);
                summary.push(vec![
                    name.clone(),
                    v.to_string(),
                    r.to_string(),
                    num(mean),
                    num(max),
                    num(run.constant),
                    num(kappa_w),
                    num(kappa_ws),
                    same.to_string(),
                ]);
            }
        }
        for run in runs {
            report.bounds.merge(run.cell.ledger);
        }
        report.note(&format!("kappa_{name}"), num(kappa_w));
        report.note(&format!("kappa_scaled_{name}"), num(kappa_ws));
    }
    report.note("discretization", "bilinear finite elements on a uniform tensor grid, nodal interpolation");
    report.note("grid", format!("{0}x{0}", p.grid_n));
    report.note("basis", "weighted POD through the SVD of L^T Y for all three methods");
    report.note("strategy", p.strategy);
    report.tables = vec![errors, summary];
    Ok(report)
}
