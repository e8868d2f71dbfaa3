//! Bilinear finite elements on the unit square.
//!
//! Nodes sit on an `n x n` tensor grid with spacing `h = 1 / (n - 1)` and are
//! numbered `k = i + n j` for the node at `(i h, j h)`. With this numbering
//! every element couples nodes at most `n + 1` apart, so all operators are
//! stored as banded matrices.

use deimkit::linalg::{Matrix, Vector};
use deimkit::WeightOperator;

use crate::error::{ExpError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    n: usize,
}

impl Grid {
    /// A grid with `n >= 2` nodes per side.
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(ExpError::config(format!("grid needs at least 2 nodes per side, got {n}")));
        }
        Ok(Grid { n })
    }

    pub fn side(&self) -> usize {
        self.n
    }

    /// Number of nodes, `n^2`.
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn h(&self) -> f64 {
        1.0 / (self.n - 1) as f64
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.n * j
    }

    pub fn coords(&self, k: usize) -> (f64, f64) {
        let h = self.h();
        ((k % self.n) as f64 * h, (k / self.n) as f64 * h)
    }

    /// Node index of the mirror image under `x -> 1 - x`.
    pub fn reflect_x(&self, k: usize) -> usize {
        let (i, j) = (k % self.n, k / self.n);
        self.index(self.n - 1 - i, j)
    }

    /// Nodal values of `f(x, y)`.
    pub fn interpolate(&self, f: impl Fn(f64, f64) -> f64) -> Vector {
        Vector::from_fn(self.len(), |k, _| {
            let (x, y) = self.coords(k);
            f(x, y)
        })
    }
}

/// Square matrix with entries only within `bw` of the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Banded {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl Banded {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Banded {
            n,
            bw,
            data: vec![0.0; n * (2 * bw + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        if i.abs_diff(j) > self.bw {
            None
        } else {
            Some(i * (2 * self.bw + 1) + j + self.bw - i)
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    /// Panics when `(i, j)` lies outside the band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j).expect("entry outside the band");
        self.data[s] += v;
    }

    fn cols(&self, i: usize) -> std::ops::Range<usize> {
        i.saturating_sub(self.bw)..(i + self.bw + 1).min(self.n)
    }

    pub fn mul_vec(&self, x: &Vector) -> Vector {
        Vector::from_fn(self.n, |i, _| self.cols(i).map(|j| self.get(i, j) * x[j]).sum())
    }

    pub fn mul_matrix(&self, x: &Matrix) -> Matrix {
        let mut y = Matrix::zeros(self.n, x.ncols());
        for i in 0..self.n {
            for j in self.cols(i) {
                let a = self.get(i, j);
                if a != 0.0 {
                    for c in 0..x.ncols() {
                        y[(i, c)] += a * x[(j, c)];
                    }
                }
            }
        }
        y
    }

    /// `sum_k c_k A_k` over operators sharing dimension and bandwidth.
    pub fn combine(terms: &[(f64, &Banded)]) -> Banded {
        let first = terms.first().expect("at least one term").1;
        let mut out = Banded::zeros(first.n, first.bw);
        for (c, a) in terms {
            assert!(a.n == first.n && a.bw == first.bw, "operators must share their band");
            for (o, v) in out.data.iter_mut().zip(&a.data) {
                *o += c * v;
            }
        }
        out
    }

    /// Nonzero entries as 0-based `(row, col, value)` triplets.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut t = Vec::new();
        for i in 0..self.n {
            for j in self.cols(i) {
                let v = self.get(i, j);
                if v != 0.0 {
                    t.push((i, j, v));
                }
            }
        }
        t
    }

    pub fn to_dense(&self) -> Matrix {
        Matrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    /// LU factorization without pivoting, for matrices whose symmetric part
    /// is positive definite (where it always exists).
    pub fn lu(&self) -> Result<BandedLu> {
        let mut a = self.clone();
        let n = self.n;
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for k in 0..n {
            let p = a.get(k, k);
            if !(p.abs() > 1e-14 * scale) {
                return Err(ExpError::LinearSolve { row: k, pivot: p });
            }
            let end = (k + self.bw + 1).min(n);
            for i in k + 1..end {
                let l = a.get(i, k) / p;
                if l == 0.0 {
                    continue;
                }
                let si = a.slot(i, k).unwrap();
                a.data[si] = l;
                for j in k + 1..end {
                    let v = a.get(k, j);
                    if v != 0.0 {
                        a.add(i, j, -l * v);
                    }
                }
            }
        }
        Ok(BandedLu { lu: a })
    }
}

/// Packed `L U` factors of a [`Banded`] matrix; `L` has a unit diagonal.
#[derive(Debug, Clone)]
pub struct BandedLu {
    lu: Banded,
}

impl BandedLu {
    pub fn solve(&self, b: &Vector) -> Vector {
        let a = &self.lu;
        let n = a.n;
        let mut x = b.clone();
        for i in 0..n {
            let lo = i.saturating_sub(a.bw);
            let s: f64 = (lo..i).map(|j| a.get(i, j) * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let hi = (i + a.bw + 1).min(n);
            let s: f64 = (i + 1..hi).map(|j| a.get(i, j) * x[j]).sum();
            x[i] = (x[i] - s) / a.get(i, i);
        }
        x
    }
}

/// Mass, stiffness and the two advection matrices on a grid.
///
/// `advection_x[(i, j)] = int phi_i d(phi_j)/dx`, so the discrete form of
/// `b . grad u` is `b_x advection_x + b_y advection_y`.
#[derive(Debug, Clone)]
pub struct FemOperators {
    pub grid: Grid,
    pub mass: Banded,
    pub stiffness: Banded,
    pub advection_x: Banded,
    pub advection_y: Banded,
}

// Two-point Gauss rule on [0, 1].
const GAUSS: [(f64, f64); 2] = [
    (0.211_324_865_405_187_1, 0.5),
    (0.788_675_134_594_812_9, 0.5),
];

// Local corners (cx, cy) of the reference square.
const CORNERS: [(usize, usize); 4] = [(0, 0), (1, 0), (0, 1), (1, 1)];

fn shape(c: (usize, usize), xi: f64, eta: f64) -> (f64, f64, f64) {
    let (fx, dx) = if c.0 == 1 { (xi, 1.0) } else { (1.0 - xi, -1.0) };
    let (fy, dy) = if c.1 == 1 { (eta, 1.0) } else { (1.0 - eta, -1.0) };
    (fx * fy, dx * fy, fx * dy)
}

pub fn assemble(grid: Grid) -> FemOperators {
    let n = grid.side();
    let h = grid.h();
    let bw = n + 1;
    let len = grid.len();

    let mut me = [[0.0; 4]; 4];
    let mut ke = [[0.0; 4]; 4];
    let mut cx = [[0.0; 4]; 4];
    let mut cy = [[0.0; 4]; 4];
    for &(xi, wx) in &GAUSS {
        for &(eta, wy) in &GAUSS {
            let w = wx * wy;
            let vals: Vec<_> = CORNERS.iter().map(|&c| shape(c, xi, eta)).collect();
            for a in 0..4 {
                for b in 0..4 {
                    let (pa, ax, ay) = vals[a];
                    let (pb, bx, by) = vals[b];
                    me[a][b] += w * pa * pb * h * h;
                    ke[a][b] += w * (ax * bx + ay * by);
                    cx[a][b] += w * pa * bx * h;
                    cy[a][b] += w * pa * by * h;
                }
            }
        }
    }

    let mut mass = Banded::zeros(len, bw);
    let mut stiffness = Banded::zeros(len, bw);
    let mut advection_x = Banded::zeros(len, bw);
    let mut advection_y = Banded::zeros(len, bw);
    for ej in 0..n - 1 {
        for ei in 0..n - 1 {
            let nodes: Vec<usize> = CORNERS.iter().map(|&(a, b)| grid.index(ei + a, ej + b)).collect();
            for a in 0..4 {
                for b in 0..4 {
                    mass.add(nodes[a], nodes[b], me[a][b]);
                    stiffness.add(nodes[a], nodes[b], ke[a][b]);
                    advection_x.add(nodes[a], nodes[b], cx[a][b]);
                    advection_y.add(nodes[a], nodes[b], cy[a][b]);
                }
            }
        }
    }
    FemOperators {
        grid,
        mass,
        stiffness,
        advection_x,
        advection_y,
    }
}

/// The `L^2` weight `M` and the `H^1` weight `M + K` on a grid with `grid_n`
/// nodes per side.
pub fn build_fem_weights(grid_n: usize) -> Result<(WeightOperator, WeightOperator)> {
    let ops = assemble(Grid::new(grid_n)?);
    weights_from(&ops)
}

pub fn weights_from(ops: &FemOperators) -> Result<(WeightOperator, WeightOperator)> {
    let m = ops.grid.len();
    let mass = WeightOperator::sparse_from_triplets(m, ops.mass.triplets())?;
    let h1 = Banded::combine(&[(1.0, &ops.mass), (1.0, &ops.stiffness)]);
    let h1 = WeightOperator::sparse_from_triplets(m, h1.triplets())?;
    Ok((mass, h1))
}
