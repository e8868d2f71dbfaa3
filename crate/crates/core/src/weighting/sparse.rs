use std::collections::{BTreeMap, VecDeque};

use crate::error::{DeimError, Result};
use crate::linalg::Matrix;

/// Symmetric sparse matrix held as a full (both triangles) compressed-column
/// structure with sorted row indices.
#[derive(Debug, Clone)]
pub struct SymSparse {
    m: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    vals: Vec<f64>,
}

/// Relative asymmetry above which input is rejected rather than symmetrized.
pub(crate) const ASYMMETRY_ERROR: f64 = 1e-6;
pub(crate) const ASYMMETRY_WARN: f64 = 1e-10;

impl SymSparse {
    /// Builds from `(row, col, value)` triplets with 0-based indices.
    /// Duplicates are summed.
    ///
    /// With `upper_only` every off-diagonal entry is mirrored, so the input
    /// describes one triangle. Otherwise the input is the full matrix, which
    /// is checked for symmetry and then symmetrized.
    pub fn from_triplets<I>(m: usize, triplets: I, upper_only: bool) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        if m == 0 {
            return Err(DeimError::Empty { rows: 0, cols: 0 });
        }
        let mut map: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (i, j, v) in triplets {
            if i >= m || j >= m {
                return Err(DeimError::InvalidArgument(format!(
                    "entry ({i}, {j}) outside a {m}x{m} matrix"
                )));
            }
            if !v.is_finite() {
                return Err(DeimError::NonFinite { row: i, col: j });
            }
            if upper_only {
                let (a, b) = if i <= j { (i, j) } else { (j, i) };
                *map.entry((b, a)).or_insert(0.0) += v;
                if a != b {
                    *map.entry((a, b)).or_insert(0.0) += v;
                }
            } else {
                *map.entry((j, i)).or_insert(0.0) += v;
            }
        }
        if !upper_only {
            let mut diff2 = 0.0;
            let mut norm2 = 0.0;
            for (&(c, r), &v) in &map {
                norm2 += v * v;
                let t = map.get(&(r, c)).copied().unwrap_or(0.0);
                diff2 += (v - t) * (v - t);
            }
            // A stored entry whose mirror is absent also makes the mirror
            // position of W - W^T nonzero.
            for (&(c, r), &v) in &map {
                if !map.contains_key(&(r, c)) {
                    diff2 += v * v;
                }
            }
            let asym = if norm2 > 0.0 { (diff2 / norm2).sqrt() } else { 0.0 };
            if asym > ASYMMETRY_ERROR {
                return Err(DeimError::NotSymmetric { asymmetry: asym });
            }
            if asym > ASYMMETRY_WARN {
                log::warn!("symmetrizing sparse weight with relative asymmetry {asym:.3e}");
            }
            if asym > 0.0 {
                let keys: Vec<(usize, usize)> = map.keys().copied().collect();
                let mut sym = BTreeMap::new();
                for (c, r) in keys {
                    let a = map.get(&(c, r)).copied().unwrap_or(0.0);
                    let b = map.get(&(r, c)).copied().unwrap_or(0.0);
                    let v = 0.5 * (a + b);
                    sym.insert((c, r), v);
                    sym.insert((r, c), v);
                }
                map = sym;
            }
        }

        let mut col_ptr = vec![0usize; m + 1];
        let mut row_idx = Vec::with_capacity(map.len());
        let mut vals = Vec::with_capacity(map.len());
        for (&(c, r), &v) in &map {
            col_ptr[c + 1] += 1;
            row_idx.push(r);
            vals.push(v);
        }
        for c in 0..m {
            col_ptr[c + 1] += col_ptr[c];
        }
        Ok(Self {
            m,
            col_ptr,
            row_idx,
            vals,
        })
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `(row, value)` pairs of column `c`, rows ascending.
    pub fn column(&self, c: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.col_ptr[c]..self.col_ptr[c + 1];
        self.row_idx[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.col_ptr[j]..self.col_ptr[j + 1];
        match self.row_idx[r.clone()].binary_search(&i) {
            Ok(p) => self.vals[r.start + p],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.m).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`.
    pub fn mul_into(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for c in 0..self.m {
            let xc = x[c];
            if xc == 0.0 {
                continue;
            }
            for p in self.col_ptr[c]..self.col_ptr[c + 1] {
                y[self.row_idx[p]] += self.vals[p] * xc;
            }
        }
    }

    pub fn to_dense(&self) -> Matrix {
        let mut a = Matrix::zeros(self.m, self.m);
        for c in 0..self.m {
            for (r, v) in self.column(c) {
                a[(r, c)] = v;
            }
        }
        a
    }

    /// Upper-triangle entries `(row, col, value)` with `row <= col`, in
    /// column-major order.
    pub fn upper_triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for c in 0..self.m {
            for (r, v) in self.column(c) {
                if r <= c {
                    out.push((r, c, v));
                }
            }
        }
        out
    }

    /// Returns `D A D` for the diagonal `d`, with the diagonal forced to
    /// `diag_value` when given.
    pub(crate) fn scaled(&self, d: &[f64], diag_value: Option<f64>) -> Self {
        let mut out = self.clone();
        for c in 0..self.m {
            for p in out.col_ptr[c]..out.col_ptr[c + 1] {
                let r = out.row_idx[p];
                out.vals[p] = match diag_value {
                    Some(v) if r == c => v,
                    _ => self.vals[p] * d[r] * d[c],
                };
            }
        }
        out
    }

    /// Reverse Cuthill–McKee ordering. `perm[a]` is the original index placed
    /// at position `a`.
    pub fn rcm_order(&self) -> Vec<usize> {
        let m = self.m;
        let adj: Vec<Vec<usize>> = (0..m)
            .map(|c| self.column(c).map(|(r, _)| r).filter(|&r| r != c).collect())
            .collect();
        let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
        let mut visited = vec![false; m];
        let mut order = Vec::with_capacity(m);

        while order.len() < m {
            let seed = (0..m)
                .filter(|&i| !visited[i])
                .min_by_key(|&i| (degree[i], i))
                .unwrap();
            let start = pseudo_peripheral(seed, &adj, &degree);
            let mut queue = VecDeque::from([start]);
            visited[start] = true;
            while let Some(v) = queue.pop_front() {
                order.push(v);
                let mut next: Vec<usize> = adj[v].iter().copied().filter(|&u| !visited[u]).collect();
                next.sort_by_key(|&u| (degree[u], u));
                for u in next {
                    visited[u] = true;
                    queue.push_back(u);
                }
            }
        }
        order.reverse();
        order
    }
}

/// Breadth-first level structure from `root`: (eccentricity, last level).
fn levels(root: usize, adj: &[Vec<usize>]) -> (usize, Vec<usize>) {
    let mut dist = vec![usize::MAX; adj.len()];
    dist[root] = 0;
    let mut queue = VecDeque::from([root]);
    let mut depth = 0;
    let mut last = vec![root];
    while let Some(v) = queue.pop_front() {
        for &u in &adj[v] {
            if dist[u] == usize::MAX {
                dist[u] = dist[v] + 1;
                if dist[u] > depth {
                    depth = dist[u];
                    last.clear();
                }
                last.push(u);
                queue.push_back(u);
            }
        }
    }
    (depth, last)
}

/// George–Liu search for a node of (nearly) maximal eccentricity.
fn pseudo_peripheral(seed: usize, adj: &[Vec<usize>], degree: &[usize]) -> usize {
    let mut root = seed;
    let (mut ecc, mut last) = levels(root, adj);
    loop {
        let candidate = *last.iter().min_by_key(|&&u| (degree[u], u)).unwrap();
        let (e, l) = levels(candidate, adj);
        if e > ecc {
            root = candidate;
            ecc = e;
            last = l;
        } else {
            return root;
        }
    }
}
