//! The nonlinear RC ladder `D dx/dt = F(x) + e_1 u(t)` with diode
//! characteristic `g(x) = exp(40 x) + x - 1`, its full-order solver and a
//! Galerkin reduced model whose nonlinearity is evaluated through a DEIM
//! projector.
//!
//! Writing `e_0 = x_1` and `e_i = x_i - x_{i+1}`, the currents are
//! `F_1 = -g(e_0) - g(e_1)`, `F_i = g(e_{i-1}) - g(e_i)` and
//! `F_N = g(e_{N-1})`.

use deimkit::linalg::{Matrix, Vector};
use deimkit::DeimProjector;

use crate::error::{ExpError, Result};

pub fn g(x: f64) -> f64 {
    (40.0 * x).exp() + x - 1.0
}

pub fn dg(x: f64) -> f64 {
    40.0 * (40.0 * x).exp() + 1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    /// First order, L-stable.
    ImplicitEuler,
    /// Second-order backward differentiation, started with one implicit
    /// Euler step.
    Bdf2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Input {
    /// `u(t) = exp(-t)`.
    Exponential,
    Zero,
}

impl Input {
    pub fn at(self, t: f64) -> f64 {
        match self {
            Input::Exponential => (-t).exp(),
            Input::Zero => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LadderConfig {
    pub n: usize,
    pub t_end: f64,
    /// Number of equidistant output times, `t = 0` included.
    pub snapshots: usize,
    pub newton_tol: f64,
    pub max_newton: usize,
    pub integrator: Integrator,
    /// Integration steps per output interval.
    pub substeps: usize,
    pub input: Input,
}

impl LadderConfig {
    pub fn new(n: usize) -> Self {
        LadderConfig {
            n,
            t_end: 7.0,
            snapshots: 2000,
            newton_tol: 1e-10,
            max_newton: 50,
            integrator: Integrator::ImplicitEuler,
            substeps: 1,
            input: Input::Exponential,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(ExpError::config(format!("the ladder needs N >= 2, got {}", self.n)));
        }
        if self.snapshots < 2 || self.substeps == 0 || !(self.t_end > 0.0) {
            return Err(ExpError::config("need at least two snapshots, one substep and t_end > 0"));
        }
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        crate::lhs::linspace(0.0, self.t_end, self.snapshots)
    }
}

/// Capacitances: 1 on the middle half of the nodes (1-based `N/4 + 1 ..= 3N/4`),
/// 1/2 elsewhere.
pub fn capacitances(n: usize) -> Vec<f64> {
    let (lo, hi) = (n / 4 + 1, 3 * n / 4);
    (1..=n).map(|i| if (lo..=hi).contains(&i) { 1.0 } else { 0.5 }).collect()
}

/// `F_i` and its nonzero partial derivatives `(index, dF_i/dx_index)`, with
/// the state read through `x`.
fn ladder_row(i: usize, n: usize, x: impl Fn(usize) -> f64) -> (f64, [(usize, f64); 3]) {
    let xi = x(i);
    let mut val = 0.0;
    let mut diag = 0.0;
    let mut left = (i.saturating_sub(1), 0.0);
    let mut right = ((i + 1).min(n - 1), 0.0);
    if i == 0 {
        val -= g(xi);
        diag -= dg(xi);
    } else {
        let e = x(i - 1) - xi;
        val += g(e);
        diag -= dg(e);
        left.1 = dg(e);
    }
    if i + 1 < n {
        let e = xi - x(i + 1);
        val -= g(e);
        diag -= dg(e);
        right.1 = dg(e);
    }
    (val, [left, (i, diag), right])
}

/// `F(x)`, the nonlinear currents without the input.
pub fn currents(x: &Vector) -> Vector {
    let n = x.len();
    Vector::from_fn(n, |i, _| ladder_row(i, n, |j| x[j]).0)
}

/// Full trajectory at the output times.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// `N x snapshots`.
    pub states: Matrix,
    /// `D^{-1} F(x)` at the same times: the vector field the DEIM basis learns.
    pub nonlinear: Matrix,
}

/// Drives a one-step scheme. `stage(c, beta_h, t, step)` must return the
/// solution `y` of `y = c + beta_h * rhs(y, t)`; `y0` is the initial state.
fn integrate<S>(cfg: &LadderConfig, y0: Vector, mut stage: S) -> Result<Vec<Vector>>
where
    S: FnMut(&Vector, f64, f64, usize) -> Result<Vector>,
{
    let h = cfg.t_end / ((cfg.snapshots - 1) * cfg.substeps) as f64;
    let mut out = Vec::with_capacity(cfg.snapshots);
    out.push(y0.clone());
    let mut prev: Option<Vector> = None;
    let mut cur = y0;
    let mut step = 0;
    for _ in 1..cfg.snapshots {
        for _ in 0..cfg.substeps {
            step += 1;
            let t = step as f64 * h;
            let next = match (cfg.integrator, &prev) {
                (Integrator::Bdf2, Some(p)) => {
                    let c = &cur * (4.0 / 3.0) - p * (1.0 / 3.0);
                    stage(&c, 2.0 / 3.0 * h, t, step)?
                }
                _ => stage(&cur, h, t, step)?,
            };
            prev = Some(std::mem::replace(&mut cur, next));
        }
        out.push(cur.clone());
    }
    Ok(out)
}

/// Solves the symmetric tridiagonal system with diagonal `a` and
/// off-diagonal `b` (`b[i]` couples `i` and `i + 1`).
fn solve_tridiagonal(a: &[f64], b: &[f64], rhs: &Vector) -> Option<Vector> {
    let n = a.len();
    let mut c = vec![0.0; n];
    let mut x = rhs.clone();
    let mut piv = a[0];
    if piv == 0.0 {
        return None;
    }
    x[0] /= piv;
    for i in 1..n {
        c[i - 1] = b[i - 1] / piv;
        piv = a[i] - b[i - 1] * c[i - 1];
        if piv == 0.0 {
            return None;
        }
        x[i] = (x[i] - b[i - 1] * x[i - 1]) / piv;
    }
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    Some(x)
}

/// Damped Newton for `residual(y) = 0` with a caller-supplied Newton step.
/// Converged once `||dy||_inf <= tol * (1 + ||y||_inf)`.
fn newton(
    y0: Vector,
    tol: f64,
    max_iter: usize,
    mut residual: impl FnMut(&Vector) -> Vector,
    mut direction: impl FnMut(&Vector, &Vector) -> Option<Vector>,
) -> std::result::Result<Vector, (f64, usize)> {
    let mut y = y0;
    let mut r = residual(&y);
    for it in 1..=max_iter {
        let Some(dy) = direction(&y, &r) else {
            return Err((r.amax(), it));
        };
        let rn = r.amax();
        let mut lambda = 1.0;
        let mut trial = &y - &dy;
        let mut rt = residual(&trial);
        // Backtrack while the step makes things worse.
        while !(rt.amax() <= rn) && lambda > 1e-4 {
            lambda *= 0.5;
            trial = &y - &dy * lambda;
            rt = residual(&trial);
        }
        let small = (&dy * lambda).amax() <= tol * (1.0 + trial.amax());
        y = trial;
        r = rt;
        if small && r.iter().all(|v| v.is_finite()) {
            return Ok(y);
        }
    }
    Err((r.amax(), max_iter))
}

pub fn solve_rc_ladder_full(cfg: &LadderConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let n = cfg.n;
    let d = capacitances(n);
    let states = integrate(cfg, Vector::zeros(n), |c, bh, t, step| {
        let u = cfg.input.at(t);
        // D (y - c) - bh (F(y) + e_1 u) = 0.
        let residual = |y: &Vector| {
            let f = currents(y);
            Vector::from_fn(n, |i, _| d[i] * (y[i] - c[i]) - bh * (f[i] + if i == 0 { u } else { 0.0 }))
        };
        let direction = |y: &Vector, r: &Vector| {
            let mut a = vec![0.0; n];
            let mut b = vec![0.0; n - 1];
            for i in 0..n {
                let (_, parts) = ladder_row(i, n, |j| y[j]);
                a[i] = d[i] - bh * parts[1].1;
                if i + 1 < n {
                    b[i] = -bh * parts[2].1;
                }
            }
            solve_tridiagonal(&a, &b, r)
        };
        newton(c.clone(), cfg.newton_tol, cfg.max_newton, residual, direction).map_err(|(res, it)| {
            ExpError::Newton {
                step,
                time: t,
                residual: res,
                iterations: it,
            }
        })
    })?;
    let mut x = Matrix::zeros(n, states.len());
    let mut h = Matrix::zeros(n, states.len());
    for (j, s) in states.iter().enumerate() {
        x.set_column(j, s);
        let f = currents(s);
        h.set_column(j, &Vector::from_fn(n, |i, _| f[i] / d[i]));
    }
    Ok(Trajectory {
        times: cfg.times(),
        states: x,
        nonlinear: h,
    })
}

/// Galerkin reduced ladder `dz/dt = V^T D (D_deim h)(V z) + V^T e_1 u`, with
/// `h = D^{-1} F`, a `D`-orthonormal state basis `V` and a DEIM projector
/// that reads `h` only at its selected indices.
#[derive(Debug, Clone)]
pub struct ReducedLadder {
    basis: Matrix,
    input: Vector,
    /// `V^T D (D_deim e_j)` for the selected indices, `k x s`.
    response: Matrix,
    selected: Vec<usize>,
    capacitance: Vec<f64>,
    /// Rows of `V` needed to evaluate `F` at the selected indices.
    rows: Vec<usize>,
    basis_rows: Matrix,
}

impl ReducedLadder {
    pub fn new(basis: &Matrix, proj: &DeimProjector) -> Result<Self> {
        let n = basis.nrows();
        if proj.dim() != n {
            return Err(ExpError::config(format!(
                "projector dimension {} does not match the state dimension {n}",
                proj.dim()
            )));
        }
        let d = capacitances(n);
        let selected = proj.selection().indices().to_vec();
        let s = selected.len();
        let mut units = Matrix::zeros(n, s);
        for (j, &i) in selected.iter().enumerate() {
            units[(i, j)] = 1.0;
            let g = proj.sample(&units.column(j).into_owned())?;
            if g.iter().enumerate().any(|(l, v)| l != j && *v != 0.0) {
                return Err(ExpError::config(
                    "the reduced ladder needs a projector that samples entries pointwise",
                ));
            }
        }
        let dh = proj.apply_matrix(&units)?;
        let mut wdh = dh;
        for (i, di) in d.iter().enumerate() {
            wdh.row_mut(i).scale_mut(*di);
        }
        let response = basis.tr_mul(&wdh);
        let mut rows: Vec<usize> = selected
            .iter()
            .flat_map(|&i| [i.saturating_sub(1), i, (i + 1).min(n - 1)])
            .collect();
        rows.sort_unstable();
        rows.dedup();
        let basis_rows = deimkit::linalg::select_rows(basis, &rows);
        Ok(ReducedLadder {
            input: basis.row(0).transpose(),
            basis: basis.clone(),
            response,
            selected,
            capacitance: d,
            rows,
            basis_rows,
        })
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Sampled field `h[selected]` and its Jacobian with respect to `z`.
    fn sampled_field(&self, z: &Vector) -> (Vector, Matrix) {
        let n = self.basis.nrows();
        let k = self.dim();
        let xr = &self.basis_rows * z;
        let at = |i: usize| xr[self.rows.binary_search(&i).expect("stencil row")];
        let s = self.selected.len();
        let mut h = Vector::zeros(s);
        let mut jac = Matrix::zeros(s, k);
        for (j, &i) in self.selected.iter().enumerate() {
            let (val, parts) = ladder_row(i, n, at);
            let di = self.capacitance[i];
            h[j] = val / di;
            for (l, dv) in parts {
                if dv != 0.0 {
                    let r = self.rows.binary_search(&l).expect("stencil row");
                    for c in 0..k {
                        jac[(j, c)] += dv / di * self.basis_rows[(r, c)];
                    }
                }
            }
        }
        (h, jac)
    }

    /// Reduced coordinates at the output times, `k x snapshots`.
    pub fn solve(&self, cfg: &LadderConfig) -> Result<Matrix> {
        cfg.validate()?;
        let k = self.dim();
        let states = integrate(cfg, Vector::zeros(k), |c, bh, t, step| {
            let u = cfg.input.at(t);
            let residual = |z: &Vector| {
                let (h, _) = self.sampled_field(z);
                z - c - (&self.response * h + &self.input * u) * bh
            };
            let direction = |z: &Vector, r: &Vector| {
                let (_, jac) = self.sampled_field(z);
                let j = Matrix::identity(k, k) - &self.response * jac * bh;
                j.lu().solve(r)
            };
            newton(c.clone(), cfg.newton_tol, cfg.max_newton, residual, direction).map_err(|(res, it)| {
                ExpError::Newton {
                    step,
                    time: t,
                    residual: res,
                    iterations: it,
                }
            })
        })?;
        let mut z = Matrix::zeros(k, states.len());
        for (j, s) in states.iter().enumerate() {
            z.set_column(j, s);
        }
        Ok(z)
    }

    /// Full-dimensional reconstruction `V z`.
    pub fn lift(&self, z: &Matrix) -> Matrix {
        &self.basis * z
    }
}

/// `||x_j - y_j||_D / ||x_j||_D` per column, 0 where `x_j = 0`.
pub fn relative_errors(x: &Matrix, y: &Matrix) -> Vec<f64> {
    let d = capacitances(x.nrows());
    (0..x.ncols())
        .map(|j| {
            let (mut num, mut den) = (0.0, 0.0);
            for i in 0..x.nrows() {
                let e = x[(i, j)] - y[(i, j)];
                num += d[i] * e * e;
                den += d[i] * x[(i, j)] * x[(i, j)];
            }
            if den > 0.0 {
                (num / den).sqrt()
            } else {
                num.sqrt()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn capacitance_blocks() {
        let d = capacitances(1000);
        assert_eq!(d[249], 0.5);
        assert_eq!(d[250], 1.0);
        assert_eq!(d[749], 1.0);
        assert_eq!(d[750], 0.5);
        let d = capacitances(100);
        assert_eq!((d[24], d[25], d[74], d[75]), (0.5, 1.0, 1.0, 0.5));
    }

    #[test]
    fn row_derivatives_match_differences() {
        let x = Vector::from_vec(vec![0.03, -0.01, 0.02, 0.005]);
        for i in 0..4 {
            let (_, parts) = ladder_row(i, 4, |j| x[j]);
            for (l, dv) in parts.into_iter().filter(|p| p.1 != 0.0) {
                let eps = 1e-7;
                let mut xp = x.clone();
                xp[l] += eps;
                let mut xm = x.clone();
                xm[l] -= eps;
                let fd = (ladder_row(i, 4, |j| xp[j]).0 - ladder_row(i, 4, |j| xm[j]).0) / (2.0 * eps);
                assert!((fd - dv).abs() < 1e-5 * (1.0 + dv.abs()), "row {i} col {l}: {fd} vs {dv}");
            }
        }
    }

    #[test]
    fn tridiagonal_solver() {
        let a = [4.0, 5.0, 6.0];
        let b = [1.0, -2.0];
        let x = Vector::from_vec(vec![1.0, 2.0, 3.0]);
        let rhs = Vector::from_vec(vec![4.0 + 2.0, 1.0 + 10.0 - 6.0, -4.0 + 18.0]);
        let y = solve_tridiagonal(&a, &b, &rhs).unwrap();
        assert!((y - x).norm() < 1e-14);
    }
}
