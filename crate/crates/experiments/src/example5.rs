//! Example 5: a parametrized advection–diffusion problem on the unit square
//! with a Gaussian source, reduced by POD-Galerkin with a DEIM source term,
//! in the Euclidean and in the `H^1` geometry.
//!
//! The full model is `-Delta u + b . grad u + u = s` with natural boundary
//! conditions and `b = (cos mu_1, sin mu_1)`. The reaction term makes the
//! pure Neumann problem uniquely solvable.

use std::f64::consts::PI;

use deimkit::linalg::{Matrix, Vector};
use deimkit::{deim, pod, selection, RankSpec, Strategy, WeightOperator};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, WeightChoice};
use crate::error::Result;
use crate::example3::evaluate;
use crate::fem::{self, Banded, FemOperators, Grid};
use crate::lhs::{latin_hypercube, uniform};
use crate::report::{clamp_ranks, mean_max, num, BoundLedger, ErrorReport, Table};
use crate::w_column_norms;

pub const PARAMETER_RANGES: [(f64, f64); 3] = [(0.0, 2.0 * PI), (0.2, 0.8), (0.15, 0.35)];
pub const SOURCE_SPREAD: f64 = 0.25;
pub const REACTION: f64 = 1.0;

pub fn source(grid: Grid, center: (f64, f64)) -> Vector {
    let s2 = SOURCE_SPREAD * SOURCE_SPREAD;
    grid.interpolate(|x, y| (-((x - center.0).powi(2) + (y - center.1).powi(2)) / s2).exp())
}

pub fn wind(mu1: f64) -> (f64, f64) {
    (mu1.cos(), mu1.sin())
}

/// Finite element discretization of the full model.
#[derive(Debug, Clone)]
pub struct AdvectionDiffusion {
    pub ops: FemOperators,
}

impl AdvectionDiffusion {
    pub fn new(grid: Grid) -> Self {
        AdvectionDiffusion { ops: fem::assemble(grid) }
    }

    pub fn grid(&self) -> Grid {
        self.ops.grid
    }

    /// `K + REACTION M + b_x C_x + b_y C_y`.
    pub fn operator(&self, b: (f64, f64)) -> Banded {
        let o = &self.ops;
        Banded::combine(&[
            (1.0, &o.stiffness),
            (REACTION, &o.mass),
            (b.0, &o.advection_x),
            (b.1, &o.advection_y),
        ])
    }

    /// Solution for wind `b` and nodal source values `s`; the load is `M s`.
    pub fn solve(&self, b: (f64, f64), s: &Vector) -> Result<Vector> {
        Ok(self.operator(b).lu()?.solve(&self.ops.mass.mul_vec(s)))
    }
}

/// Galerkin projection of the model onto the columns of `v`.
struct ReducedModel {
    v: Matrix,
    stiffness: Matrix,
    mass: Matrix,
    adv_x: Matrix,
    adv_y: Matrix,
    /// `V^T M`, applied to the approximated source.
    load: Matrix,
}

impl ReducedModel {
    fn new(model: &AdvectionDiffusion, v: Matrix) -> Self {
        let o = &model.ops;
        let project = |a: &Banded| v.tr_mul(&a.mul_matrix(&v));
        ReducedModel {
            stiffness: project(&o.stiffness),
            mass: project(&o.mass),
            adv_x: project(&o.advection_x),
            adv_y: project(&o.advection_y),
            load: o.mass.mul_matrix(&v).transpose(),
            v,
        }
    }

    fn solve(&self, b: (f64, f64), s: &Vector) -> Option<Vector> {
        let a = &self.stiffness + &self.mass * REACTION + &self.adv_x * b.0 + &self.adv_y * b.1;
        let z = a.lu().solve(&(&self.load * s))?;
        Some(&self.v * z)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example5Params {
    pub grid_n: usize,
    pub n_train: usize,
    pub n_test: usize,
    /// Solution basis dimensions swept with the source basis held at `deim_rank`.
    pub pod_ranks: Vec<usize>,
    /// Largest source basis; the source sweep runs over `1..=deim_rank`.
    pub deim_rank: usize,
    pub strategy: Strategy,
    pub eta: f64,
    pub weight: WeightChoice,
    pub seed: u64,
}

impl Example5Params {
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        Example5Params {
            grid_n: cfg.points.unwrap_or(if cfg.small { 21 } else { 41 }),
            n_train: cfg.train.unwrap_or(if cfg.paper_scale { 1000 } else { 200 }),
            n_test: cfg.test.unwrap_or(10),
            pod_ranks: cfg.ranks.clone().unwrap_or_else(|| (1..=28).collect()),
            deim_rank: cfg.deim_rank.unwrap_or(24),
            strategy: cfg.strategy_or(Strategy::Qdeim),
            eta: cfg.eta,
            weight: cfg.weight.clone().unwrap_or(WeightChoice::H1),
            seed: cfg.seed,
        }
    }
}

/// Sources and solutions at the given parameters, one column each.
pub fn snapshots(model: &AdvectionDiffusion, mus: &[Vec<f64>]) -> Result<(Matrix, Matrix)> {
    let m = model.grid().len();
    let cols: Vec<Result<(Vector, Vector)>> = mus
        .par_iter()
        .map(|mu| {
            let s = source(model.grid(), (mu[1], mu[2]));
            let u = model.solve(wind(mu[0]), &s)?;
            Ok((s, u))
        })
        .collect();
    let mut src = Matrix::zeros(m, mus.len());
    let mut sol = Matrix::zeros(m, mus.len());
    for (j, c) in cols.into_iter().enumerate() {
        let (s, u) = c?;
        src.set_column(j, &s);
        sol.set_column(j, &u);
    }
    Ok((src, sol))
}

pub fn run_example5(cfg: &ExperimentConfig) -> Result<ErrorReport> {
    let p = Example5Params::from_config(cfg);
    let grid = Grid::new(p.grid_n)?;
    let model = AdvectionDiffusion::new(grid);
    let m = grid.len();
    let w = match p.weight {
        WeightChoice::Mass => fem::weights_from(&model.ops)?.0,
        WeightChoice::H1 => fem::weights_from(&model.ops)?.1,
        ref other => other.resolve(m)?,
    };
    let eye = WeightOperator::identity(m)?;

    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let train_mu = latin_hypercube(p.n_train, &PARAMETER_RANGES, &mut rng);
    let test_mu = uniform(p.n_test, &PARAMETER_RANGES, &mut rng);
    let (src, sol) = snapshots(&model, &train_mu)?;
    let (src_t, sol_t) = snapshots(&model, &test_mu)?;
    let src_norms = w_column_norms(&w, &src_t)?;
    let sol_norms = w_column_norms(&w, &sol_t)?;

    let mut report = ErrorReport::new(5);
    let src_pod = pod::pod_basis(&src, &eye, RankSpec::Explicit(1))?;
    let src_wpod = pod::pod_basis(&src, &w, RankSpec::Explicit(1))?;
    let max_src = src_pod.numerical_rank().min(src_wpod.numerical_rank());
    let deim_rank = clamp_ranks(&[p.deim_rank], max_src, &mut report, "source")[0];

    // Source approximation: Euclidean DEIM against generalized W-DEIM.
    struct SourceRow {
        deim: (f64, f64),
        wdeim: (f64, f64),
        ledger: BoundLedger,
    }
    let rows: Vec<Result<SourceRow>> = (1..=deim_rank)
        .into_par_iter()
        .map(|r| {
            let mut ledger = BoundLedger::default();
            let u = src_pod.truncate(r)?.u_hat().clone();
            let sel = selection::select(&u, p.strategy, p.eta)?;
            let d = deim::build_deim(&u, &sel)?;
            let diff = &src_t - d.apply_matrix(&src_t)?;
            let orth = &src_t - &u * u.tr_mul(&src_t);
            let err_w = w_column_norms(&w, &diff)?;
            let mut rel = Vec::new();
            for j in 0..src_t.ncols() {
                let f = src_t.column(j).norm();
                let c = d.error_constant();
                ledger.check(|| format!("DEIM r={r} test {j}"), diff.column(j).norm(), c, orth.column(j).norm(), f);
                rel.push(err_w[j] / src_norms[j]);
            }
            let basis = src_wpod.truncate(r)?;
            let sel = selection::select(basis.u_euclid(), p.strategy, p.eta)?;
            let dw = deim::build_wdeim_generalized(&basis, &sel)?;
            let cell = evaluate(&format!("W-DEIM r={r}"), &dw, &basis, &src_t, &src_norms)?;
            ledger.merge(cell.ledger);
            Ok(SourceRow {
                deim: (mean_max(&rel).0, d.error_constant()),
                wdeim: (mean_max(&cell.relerr_w).0, dw.error_constant()),
                ledger,
            })
        })
        .collect();
    let mut source_table = Table::new(
        "example5_source",
        &["r", "relerr_deim", "relerr_wdeim", "error_constant_deim", "error_constant_wdeim"],
    );
    for (r, row) in (1..=deim_rank).zip(rows) {
        let row = row?;
        source_table.push(vec![
            r.to_string(),
            num(row.deim.0),
            num(row.wdeim.0),
            num(row.deim.1),
            num(row.wdeim.1),
        ]);
        report.bounds.merge(row.ledger);
    }

    // Solution: POD-DEIM against WPOD-WDEIM, source basis fixed at deim_rank.
    let u = src_pod.truncate(deim_rank)?.u_hat().clone();
    let d = deim::build_deim(&u, &selection::select(&u, p.strategy, p.eta)?)?;
    let approx_src = d.apply_matrix(&src_t)?;
    let basis = src_wpod.truncate(deim_rank)?;
    let dw = deim::build_wdeim_generalized(&basis, &selection::select(basis.u_euclid(), p.strategy, p.eta)?)?;
    let approx_src_w = dw.apply_matrix(&src_t)?;

    let sol_pod = pod::pod_basis(&sol, &eye, RankSpec::Explicit(1))?;
    let sol_wpod = pod::pod_basis(&sol, &w, RankSpec::Explicit(1))?;
    let max_sol = sol_pod.numerical_rank().min(sol_wpod.numerical_rank());
    let ranks = clamp_ranks(&p.pod_ranks, max_sol, &mut report, "solution");
    let errs: Vec<Result<(f64, f64)>> = ranks
        .par_iter()
        .map(|&k| {
            let mean_error = |v: Matrix, approx: &Matrix| -> Result<f64> {
                let rom = ReducedModel::new(&model, v);
                let mut diff = Matrix::zeros(m, test_mu.len());
                for (j, mu) in test_mu.iter().enumerate() {
                    let ur = rom
                        .solve(wind(mu[0]), &approx.column(j).into_owned())
                        .ok_or(crate::error::ExpError::LinearSolve { row: j, pivot: 0.0 })?;
                    diff.set_column(j, &(sol_t.column(j) - ur));
                }
                let e = w_column_norms(&w, &diff)?;
                let rel: Vec<f64> = e.iter().zip(&sol_norms).map(|(a, b)| a / b).collect();
                Ok(mean_max(&rel).0)
            };
            let e1 = mean_error(sol_pod.truncate(k)?.u_hat().clone(), &approx_src)?;
            let e2 = mean_error(sol_wpod.truncate(k)?.u_hat().clone(), &approx_src_w)?;
            Ok((e1, e2))
        })
        .collect();
    let mut solution_table = Table::new("example5_solution", &["k", "relerr_pod_deim", "relerr_wpod_wdeim"]);
    for (&k, e) in ranks.iter().zip(errs) {
        let (e1, e2) = e?;
        solution_table.push(vec![k.to_string(), num(e1), num(e2)]);
    }

    report.note("discretization", "bilinear finite elements, no stabilization, natural boundary conditions");
    report.note("reaction", num(REACTION));
    report.note("grid", format!("{0}x{0}", p.grid_n));
    report.note("train", format!("{} Latin hypercube points", p.n_train));
    report.note("test", format!("{} uniform random points", p.n_test));
    report.note("weight", &p.weight);
    report.note("strategy", p.strategy);
    report.note("deim_rank", deim_rank);
    report.note("seed", p.seed);
    report.tables = vec![source_table, solution_table];
    Ok(report)
}
