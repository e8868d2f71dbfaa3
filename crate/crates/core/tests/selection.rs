mod common;

use common::*;
use deimkit::linalg::{select_rows, singular_values, srrqr_bound, Matrix};
use deimkit::selection::{
    select, select_deim_greedy, select_oversampled, select_qdeim, select_srrqr, SelectionOperator, Strategy,
};

fn kappa_of(u: &Matrix, idx: &[usize]) -> f64 {
    let s = singular_values(&select_rows(u, idx)).unwrap();
    1.0 / s.last().unwrap()
}

#[test]
fn stored_kappa_matches_recomputation() {
    let mut g = rng(1);
    for _ in 0..20 {
        let u = orthonormal(&mut g, 60, 5);
        for s in [Strategy::DeimGreedy, Strategy::Qdeim, Strategy::Srrqr] {
            let sel = select(&u, s, 2.0).unwrap();
            let k = kappa_of(&u, sel.indices());
            assert!((sel.kappa() - k).abs() <= 1e-10 * k);
            assert!(sel.kappa() >= 1.0 - 1e-12);
        }
    }
}

#[test]
fn srrqr_bound_on_large_bases() {
    let mut g = rng(2);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let u = orthonormal(&mut g, 500, 25);
        let sel = select_srrqr(&u, 2.0).unwrap();
        let bound = srrqr_bound(25, 500, 2.0);
        assert!((bound - 217.9).abs() < 0.1);
        assert!(sel.kappa() <= bound);
        worst = worst.max(sel.kappa());
    }
    // Observed values are far below the ceiling.
    assert!(worst < 50.0, "{worst}");
}

#[test]
fn qdeim_versus_greedy_statistic() {
    let mut g = rng(3);
    let mut wins = 0;
    for _ in 0..200 {
        let u = orthonormal(&mut g, 100, 10);
        let q = select_qdeim(&u).unwrap().kappa();
        let d = select_deim_greedy(&u).unwrap().kappa();
        if q <= d {
            wins += 1;
        }
    }
    assert!(wins >= 120, "Q-DEIM was at least as good on {wins}/200");
}

#[test]
fn oversampling_never_increases_kappa() {
    let mut g = rng(4);
    for _ in 0..100 {
        let u = orthonormal(&mut g, 50, 4);
        let base = select_srrqr(&u, 2.0).unwrap();
        let over = select_oversampled(&u, 8, Strategy::Srrqr, 2.0).unwrap();
        assert_eq!(&over.indices()[..4], base.indices());
        assert_eq!(over.len(), 8);
        assert!(over.kappa() <= base.kappa() * (1.0 + 1e-12));
    }
}

#[test]
fn row_permutation_equivariance() {
    let mut g = rng(5);
    let u = orthonormal(&mut g, 30, 4);
    let perm: Vec<usize> = (0..30).map(|i| (i * 7 + 3) % 30).collect();
    let pu = Matrix::from_fn(30, 4, |i, j| u[(perm[i], j)]);
    for s in [Strategy::DeimGreedy, Strategy::Qdeim, Strategy::Srrqr] {
        let a = select(&u, s, 2.0).unwrap();
        let b = select(&pu, s, 2.0).unwrap();
        let mapped: Vec<usize> = b.indices().iter().map(|&i| perm[i]).collect();
        let mut x = a.indices().to_vec();
        let mut y = mapped;
        x.sort();
        y.sort();
        assert_eq!(x, y, "{s}");
        assert!((a.kappa() - b.kappa()).abs() <= 1e-10 * a.kappa());
    }
}

#[test]
fn brute_force_lower_bound() {
    let mut g = rng(6);
    for trial in 0..50 {
        let m = 4 + trial % 7;
        let r = 1 + trial % 3;
        let u = orthonormal(&mut g, m, r);
        let sel = select_srrqr(&u, 2.0).unwrap();
        let best = all_subsets(m, r)
            .iter()
            .map(|s| {
                let sv = singular_values(&select_rows(&u, s)).unwrap();
                if *sv.last().unwrap() > 0.0 {
                    1.0 / sv.last().unwrap()
                } else {
                    f64::INFINITY
                }
            })
            .fold(f64::INFINITY, f64::min);
        assert!(best <= sel.kappa() * (1.0 + 1e-12));
        assert!(sel.kappa() <= srrqr_bound(r, m, 2.0) * (1.0 + 1e-12));
    }
}

#[test]
fn explicit_indices_are_validated() {
    let u = Matrix::identity(4, 2);
    assert!(SelectionOperator::from_indices(&u, vec![0, 0], Strategy::Qdeim, None).is_err());
    assert!(SelectionOperator::from_indices(&u, vec![0, 4], Strategy::Qdeim, None).is_err());
    assert!(SelectionOperator::from_indices(&u, vec![], Strategy::Qdeim, None).is_err());
    assert!(SelectionOperator::from_indices(&u, vec![2, 3], Strategy::Qdeim, None).is_err());
    let s = SelectionOperator::from_indices(&u, vec![1, 0], Strategy::Qdeim, None).unwrap();
    assert_eq!(s.to_string(), "S 4 2 : 2 1");
    assert_eq!("srrqr".parse::<Strategy>().unwrap(), Strategy::Srrqr);
    assert!("random".parse::<Strategy>().is_err());
}
