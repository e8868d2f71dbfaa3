//! Example 3: generalized W-DEIM of a four-corner peak function under the
//! identity, `L^2` and `H^1` weights.

use deimkit::linalg::Matrix;
use deimkit::{deim, pod, selection, DeimProjector, PodBasis, RankSpec, Strategy, WeightOperator};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, WeightChoice};
use crate::error::Result;
use crate::fem::{self, Grid};
use crate::lhs::linspace;
use crate::report::{clamp_ranks, mean_max, num, BoundLedger, ErrorReport, Table};
use crate::w_column_norms;

fn h(z: f64, mu: f64) -> f64 {
    let d = (1.0 - z) - (0.99 * mu - 1.0);
    d * d
}

fn g(x1: f64, x2: f64, mu1: f64, mu2: f64) -> f64 {
    1.0 / (h(x1, mu1) + h(x2, mu2) + 0.1 * 0.1).sqrt()
}

/// Sum of four reflected copies of a peak; for a given parameter the sharp
/// peak sits near one corner of the unit square.
pub fn corner_peaks(x1: f64, x2: f64, mu1: f64, mu2: f64) -> f64 {
    g(x1, x2, mu1, mu2)
        + g(1.0 - x1, 1.0 - x2, 1.0 - mu1, 1.0 - mu2)
        + g(1.0 - x1, x2, 1.0 - mu1, mu2)
        + g(x1, 1.0 - x2, mu1, 1.0 - mu2)
}

/// A tensor grid of parameters on `[0, 1]^2`, first coordinate fastest.
pub fn parameter_grid(per_side: usize) -> Vec<(f64, f64)> {
    let t = linspace(0.0, 1.0, per_side);
    t.iter().flat_map(|&b| t.iter().map(move |&a| (a, b))).collect()
}

pub fn sample(grid: Grid, mus: &[(f64, f64)]) -> Matrix {
    let mut y = Matrix::zeros(grid.len(), mus.len());
    for (j, &(m1, m2)) in mus.iter().enumerate() {
        y.set_column(j, &grid.interpolate(|x1, x2| corner_peaks(x1, x2, m1, m2)));
    }
    y
}

/// Snapshots, test functions and weights shared by Examples 3 and 4.
#[derive(Debug, Clone)]
pub struct CornerSetup {
    pub grid: Grid,
    pub train: Matrix,
    pub test_mu: Vec<(f64, f64)>,
    pub test: Matrix,
    pub mass: WeightOperator,
    pub h1: WeightOperator,
}

impl CornerSetup {
    pub fn new(grid_n: usize, train_side: usize, test_side: usize) -> Result<Self> {
        let grid = Grid::new(grid_n)?;
        let test_mu = parameter_grid(test_side);
        let (mass, h1) = fem::build_fem_weights(grid_n)?;
        Ok(CornerSetup {
            grid,
            train: sample(grid, &parameter_grid(train_side)),
            test: sample(grid, &test_mu),
            test_mu,
            mass,
            h1,
        })
    }

    /// Resolves a weight choice, reusing the assembled FE weights.
    pub fn weight(&self, choice: &WeightChoice) -> Result<WeightOperator> {
        match choice {
            WeightChoice::Mass => Ok(self.mass.clone()),
            WeightChoice::H1 => Ok(self.h1.clone()),
            other => other.resolve(self.grid.len()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CornerParams {
    pub grid_n: usize,
    pub train_side: usize,
    pub test_side: usize,
    pub ranks: Vec<usize>,
    pub strategy: Strategy,
    pub eta: f64,
}

impl CornerParams {
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        CornerParams {
            grid_n: cfg.points.unwrap_or(if cfg.small { 50 } else { 100 }),
            train_side: cfg.train.unwrap_or(25),
            test_side: cfg.test.unwrap_or(11),
            ranks: cfg.ranks.clone().unwrap_or_else(|| (5..=50).step_by(5).collect()),
            strategy: cfg.strategy_or(Strategy::Srrqr),
            eta: cfg.eta,
        }
    }
}

/// Errors of one projector on the test set.
#[derive(Debug, Clone)]
pub(crate) struct Cell {
    pub relerr_w: Vec<f64>,
    pub relerr_euclid: Vec<f64>,
    pub orth_relerr_w: Vec<f64>,
    pub ledger: BoundLedger,
}

/// Relative errors of `d` on the columns of `test` and the bound
/// `||f - D f||_W <= C ||f - P f||_W` with `C = d.error_constant()`.
pub(crate) fn evaluate(
    label: &str,
    d: &DeimProjector,
    basis: &PodBasis,
    test: &Matrix,
    test_norms_w: &[f64],
) -> Result<Cell> {
    let w = basis.weight();
    let diff = test - d.apply_matrix(test)?;
    let err = w_column_norms(w, &diff)?;
    let orth = w_column_norms(w, &(test - basis.project_matrix(test)?))?;
    let c = d.error_constant();
    let mut cell = Cell {
        relerr_w: Vec::new(),
        relerr_euclid: Vec::new(),
        orth_relerr_w: Vec::new(),
        ledger: BoundLedger::default(),
    };
    for j in 0..test.ncols() {
        let fw = test_norms_w[j];
        cell.ledger.check(|| format!("{label} test {j}"), err[j], c, orth[j], fw);
        cell.relerr_w.push(err[j] / fw);
        cell.orth_relerr_w.push(orth[j] / fw);
        cell.relerr_euclid.push(diff.column(j).norm() / test.column(j).norm());
    }
    Ok(cell)
}

pub fn run_example3(cfg: &ExperimentConfig) -> Result<ErrorReport> {
    let p = CornerParams::from_config(cfg);
    let setup = CornerSetup::new(p.grid_n, p.train_side, p.test_side)?;
    let choices = match &cfg.weight {
        Some(w) => vec![w.clone()],
        None => vec![WeightChoice::Identity, WeightChoice::Mass, WeightChoice::H1],
    };

    let mut report = ErrorReport::new(3);
    let mut errors = Table::new(
        "example3_errors",
        &["weight", "r", "mu1", "mu2", "relerr_w", "relerr_euclid", "orth_relerr_w"],
    );
    let mut summary = Table::new(
        "example3_summary",
        &["weight", "r", "mean_relerr", "max_relerr", "error_constant", "lemma_bound", "kappa_w"],
    );
    for choice in &choices {
        let w = setup.weight(choice)?;
        let name = choice.to_string();
        let pod = pod::pod_basis(&setup.train, &w, RankSpec::Explicit(1))?;
        let ranks = clamp_ranks(&p.ranks, pod.numerical_rank(), &mut report, &name);
        let norms = w_column_norms(&w, &setup.test)?;
        let kappa_w = w.condition_estimate();
        let cells: Vec<Result<(Cell, f64, Option<f64>)>> = ranks
            .par_iter()
            .map(|&r| {
                let basis = pod.truncate(r)?;
                let sel = selection::select(basis.u_euclid(), p.strategy, p.eta)?;
                let d = deim::build_wdeim_generalized(&basis, &sel)?;
                let cell = evaluate(&format!("{name} r={r}"), &d, &basis, &setup.test, &norms)?;
                Ok((cell, d.error_constant(), d.a_priori_bound()))
            })
            .collect();
        for (&r, cell) in ranks.iter().zip(cells) {
            let (cell, constant, lemma) = cell?;
            for (j, &(m1, m2)) in setup.test_mu.iter().enumerate() {
                errors.push(vec![
                    name.clone(),
                    r.to_string(),
                    num(m1),
                    num(m2),
                    num(cell.relerr_w[j]),
                    num(cell.relerr_euclid[j]),
                    num(cell.orth_relerr_w[j]),
                ]);
            }
            let (mean, max) = mean_max(&cell.relerr_w);
            summary.push(vec![
                name.clone(),
                r.to_string(),
                num(mean),
                num(max),
                num(constant),
                lemma.map_or_else(|| "NaN".into(), num),
                num(kappa_w),
            ]);
            report.bounds.merge(cell.ledger);
        }
        report.note(&format!("numerical_rank_{name}"), pod.numerical_rank());
    }
    report.note("discretization", "bilinear finite elements on a uniform tensor grid, nodal interpolation");
    report.note("grid", format!("{0}x{0}", p.grid_n));
    report.note("train", format!("{0}x{0}", p.train_side));
    report.note("test", format!("{0}x{0}", p.test_side));
    report.note("strategy", p.strategy);
    report.tables = vec![errors, summary];
    Ok(report)
}
