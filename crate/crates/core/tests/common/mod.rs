#![allow(dead_code)]

use deimkit::linalg::{householder_qr, Matrix, Vector};
use deimkit::weighting::WeightOperator;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Matrix {
    Matrix::from_fn(m, n, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_vec(rng: &mut ChaCha8Rng, m: usize) -> Vector {
    Vector::from_fn(m, |_, _| rng.sample(StandardNormal))
}

/// `m x r` with orthonormal columns.
pub fn orthonormal(rng: &mut ChaCha8Rng, m: usize, r: usize) -> Matrix {
    householder_qr(&gaussian(rng, m, r)).unwrap().q
}

/// A dense SPD matrix with condition number around `cond`.
pub fn spd(rng: &mut ChaCha8Rng, m: usize, cond: f64) -> Matrix {
    let q = orthonormal(rng, m, m);
    let d = Vector::from_fn(m, |i, _| cond.powf(i as f64 / (m.max(2) - 1) as f64));
    &q * Matrix::from_diagonal(&d) * q.transpose()
}

/// A random sparse SPD matrix: a diagonally dominant band plus a few long-range couplings.
pub fn sparse_spd(rng: &mut ChaCha8Rng, m: usize) -> WeightOperator {
    let mut t = Vec::new();
    let mut diag = vec![1.0; m];
    let add = |t: &mut Vec<(usize, usize, f64)>, diag: &mut Vec<f64>, i: usize, j: usize, v: f64| {
        t.push((i, j, v));
        t.push((j, i, v));
        diag[i] += v.abs();
        diag[j] += v.abs();
    };
    for i in 0..m.saturating_sub(1) {
        let v: f64 = rng.random_range(-1.0..1.0);
        add(&mut t, &mut diag, i, i + 1, v);
    }
    for _ in 0..m / 4 {
        let i = rng.random_range(0..m);
        let j = rng.random_range(0..m);
        if i != j {
            let v: f64 = rng.random_range(-0.5..0.5);
            add(&mut t, &mut diag, i, j, v);
        }
    }
    for (i, d) in diag.into_iter().enumerate() {
        t.push((i, i, d));
    }
    WeightOperator::sparse_from_triplets(m, t).unwrap()
}

/// Smooth parametrized snapshots `m x n`.
pub fn snapshots(m: usize, n: usize) -> Matrix {
    Matrix::from_fn(m, n, |i, j| {
        let x = i as f64 / (m - 1) as f64;
        let mu = 0.5 + 2.0 * j as f64 / n as f64;
        (-mu * x).exp() * (4.0 * mu * x).cos() + (mu * x * x).sin()
    })
}

/// The Kahan matrix `diag(s^i) (I - c N)` with `N` the strict upper ones and
/// `c^2 + s^2 = 1`. Column `j` is scaled by `1 - tau j` so that column
/// pivoting keeps the natural order.
pub fn kahan(n: usize, c: f64, tau: f64) -> Matrix {
    let s = (1.0 - c * c).sqrt();
    Matrix::from_fn(n, n, |i, j| {
        let v = if i == j {
            1.0
        } else if i < j {
            -c
        } else {
            0.0
        };
        v * s.powi(i as i32) * (1.0 - tau * j as f64)
    })
}

pub fn all_subsets(m: usize, r: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, m: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..m {
            cur.push(i);
            rec(i + 1, m, r, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, m, r, &mut Vec::new(), &mut out);
    out
}
