//! Seeded Latin hypercube and uniform sampling of box-shaped parameter sets.

use rand::seq::SliceRandom;
use rand::Rng;

/// `n` points in the box `ranges`. Each axis is cut into `n` equal strata,
/// every stratum receives exactly one point at a uniform position inside it,
/// and the strata are matched across axes by independent random permutations.
pub fn latin_hypercube<R: Rng + ?Sized>(n: usize, ranges: &[(f64, f64)], rng: &mut R) -> Vec<Vec<f64>> {
    let mut points = vec![vec![0.0; ranges.len()]; n];
    for (d, &(lo, hi)) in ranges.iter().enumerate() {
        let mut strata: Vec<usize> = (0..n).collect();
        strata.shuffle(rng);
        for (p, s) in points.iter_mut().zip(strata) {
            let u: f64 = rng.random();
            p[d] = lo + (hi - lo) * (s as f64 + u) / n as f64;
        }
    }
    points
}

pub fn uniform<R: Rng + ?Sized>(n: usize, ranges: &[(f64, f64)], rng: &mut R) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| ranges.iter().map(|&(lo, hi)| lo + (hi - lo) * rng.random::<f64>()).collect())
        .collect()
}

/// `n` evenly spaced values from `lo` to `hi`, both included.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}
