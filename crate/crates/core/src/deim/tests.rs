use super::*;
use crate::linalg::spectral_norm;
use crate::pod::pod_basis;
use crate::selection::{select_qdeim, select_srrqr};

fn orth(m: usize, r: usize, seed: f64) -> Matrix {
    let a = Matrix::from_fn(m, r, |i, j| ((i as f64 + 1.0) * (j as f64 + seed) * 0.731 + (i * i) as f64 * 0.13).sin());
    householder_qr(&a).unwrap().q
}

fn vecf(m: usize, seed: f64) -> Vector {
    Vector::from_fn(m, |i, _| ((i as f64 + seed) * 1.37).cos() + 0.1 * i as f64)
}

fn spd(m: usize) -> Matrix {
    let b = Matrix::from_fn(m, m, |i, j| ((i * 13 + j * 5) as f64 * 0.29).sin());
    &b * b.transpose() + Matrix::identity(m, m) * 0.3
}

fn snapshots(m: usize, n: usize) -> Matrix {
    Matrix::from_fn(m, n, |i, j| {
        let x = i as f64 / (m - 1) as f64;
        let mu = 0.5 + j as f64 * 0.3;
        (-mu * x).exp() * (3.0 * mu * x).sin() + x * mu.cos()
    })
}

fn rel(a: &Matrix, b: &Matrix) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

#[test]
fn two_dimensional_oblique_projector() {
    let th = std::f64::consts::FRAC_PI_3;
    let u = Matrix::from_column_slice(2, 1, &[th.cos(), th.sin()]);
    let sel = SelectionOperator::from_indices(&u, vec![0], Strategy::Qdeim, None).unwrap();
    let d = build_deim(&u, &sel).unwrap();
    assert!((d.error_constant() - 2.0).abs() < 1e-12);
    let dm = d.assemble().unwrap();
    assert!((spectral_norm(&dm).unwrap() - 2.0).abs() < 1e-12);

    let c = canonical_analysis(&d).unwrap();
    assert_eq!((c.ell, c.p), (0, 1));
    assert!((c.angles[0] - th).abs() < 1e-12);
    assert!((c.norm_d - 2.0).abs() < 1e-12);

    // f = e2: D f = 0, P f = sin(th) u.
    let f = Vector::from_vec(vec![0.0, 1.0]);
    assert!(d.apply(&f).unwrap().norm() < 1e-15);
    let e = d.error_decomposition(&f).unwrap();
    assert!((e.total - 1.0).abs() < 1e-12);
    assert!((e.orth_err - th.cos()).abs() < 1e-12);
    assert!((e.oblique_excess - th.sin()).abs() < 1e-12);
    assert!((e.kappa_prime - 1.0 / th.cos()).abs() < 1e-12);
}

#[test]
fn reproduces_range_and_zero() {
    let u = orth(20, 4, 1.0);
    let d = build_deim(&u, &select_qdeim(&u).unwrap()).unwrap();
    let f = &u * Vector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
    assert!((d.apply(&f).unwrap() - &f).norm() <= 1e-10 * f.norm());
    assert_eq!(d.apply(&Vector::zeros(20)).unwrap(), Vector::zeros(20));
    assert!(d.apply(&Vector::zeros(3)).is_err());
}

#[test]
fn exhaustive_small_bound() {
    let u = orth(4, 2, 2.0);
    let p = &u * u.transpose();
    for a in 0..4 {
        for b in a + 1..4 {
            let Ok(sel) = SelectionOperator::from_indices(&u, vec![a, b], Strategy::Qdeim, None) else {
                continue;
            };
            let d = build_deim(&u, &sel).unwrap();
            for t in 0..100 {
                let f = vecf(4, t as f64 * 0.71);
                let lhs = (&f - d.apply(&f).unwrap()).norm();
                let rhs = sel.kappa() * (&f - &p * &f).norm();
                assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-14);
            }
        }
    }
}

#[test]
fn generalized_identity_weight_matches_deim() {
    let y = snapshots(25, 9);
    let w = WeightOperator::identity(25).unwrap();
    let basis = pod_basis(&y, &w, RankSpec::Explicit(3)).unwrap();
    let sel = select_srrqr(basis.u_euclid(), 2.0).unwrap();
    let a = build_wdeim_generalized(&basis, &sel).unwrap().assemble().unwrap();
    let b = build_deim(basis.u_euclid(), &sel).unwrap().assemble().unwrap();
    assert!((a - b).amax() < 1e-12);
}

#[test]
fn generalized_diagonal_weight_interpolates_pointwise() {
    let m = 18;
    let wd: Vec<f64> = (0..m).map(|i| 1.0 + i as f64 * 0.5).collect();
    let w = WeightOperator::diagonal(wd.clone()).unwrap();
    let basis = pod_basis(&snapshots(m, 7), &w, RankSpec::Explicit(3)).unwrap();
    let sel = select_srrqr(basis.u_euclid(), 2.0).unwrap();
    let d = build_wdeim_generalized(&basis, &sel).unwrap();
    let f = vecf(m, 0.3);
    let df = d.apply(&f).unwrap();
    for &i in sel.indices() {
        assert!((wd[i].sqrt() * (df[i] - f[i])).abs() < 1e-12);
    }
}

#[test]
fn generalized_dense_weight_norm_and_residuals() {
    let m = 30;
    let w = WeightOperator::dense(spd(m)).unwrap();
    let basis = pod_basis(&snapshots(m, 10), &w, RankSpec::Explicit(4)).unwrap();
    let sel = select_srrqr(basis.u_euclid(), 2.0).unwrap();
    let d = build_wdeim_generalized(&basis, &sel).unwrap();
    let exact = w.w_operator_norm(&d.assemble().unwrap()).unwrap();
    assert!((exact - sel.kappa()).abs() <= 1e-9 * exact);
    assert_eq!(d.error_constant(), d.kernel_inv_norm());

    let f = vecf(m, 1.1);
    let res = d.dgeim_residuals(&f).unwrap();
    assert!(res.amax() <= 1e-10 * w.w_norm(&f).unwrap());
    // S^T W S = I for S = L^{-T} S_hat.
    let idx = sel.indices();
    let s_hat = Matrix::from_fn(m, idx.len(), |i, k| if idx[k] == i { 1.0 } else { 0.0 });
    let s = w.lt_solve(&s_hat).unwrap();
    assert!((s.tr_mul(&w.mul(&s).unwrap()) - Matrix::identity(4, 4)).amax() < 1e-10);
}

#[test]
fn dgeim_residuals_require_functionals() {
    let u = orth(6, 2, 0.5);
    let d = build_deim(&u, &select_qdeim(&u).unwrap()).unwrap();
    assert!(matches!(d.dgeim_residuals(&vecf(6, 0.0)), Err(DeimError::WrongVariant { .. })));
}

#[test]
fn pointwise_identity_weight_matches_srrqr() {
    let y = snapshots(30, 8);
    let w = WeightOperator::identity(30).unwrap();
    let d = build_wdeim_pointwise(&y, &w, RankSpec::Explicit(4), 2.0).unwrap();
    let basis = pod_basis(&y, &w, RankSpec::Explicit(4)).unwrap();
    let sel = select_srrqr(basis.u_euclid(), 2.0).unwrap();
    assert_eq!(d.selection().indices(), sel.indices());
    let s = build_wdeim_scaled(&y, &w, RankSpec::Explicit(4), 2.0).unwrap();
    assert_eq!(s.selection().indices(), sel.indices());
    assert!(rel(&s.assemble().unwrap(), &d.assemble().unwrap()) < 1e-12);
}

#[test]
fn pointwise_reproduces_span_and_interpolates() {
    let m = 26;
    let w = WeightOperator::dense(spd(m)).unwrap();
    let basis = pod_basis(&snapshots(m, 9), &w, RankSpec::Explicit(4)).unwrap();
    for d in [
        build_wdeim_pointwise_from_basis(&basis, Strategy::Srrqr, 2.0).unwrap(),
        build_wdeim_scaled_from_basis(&basis, Strategy::Srrqr, 2.0).unwrap(),
    ] {
        let f = basis.u_hat() * Vector::from_vec(vec![0.3, -1.0, 2.0, 0.7]);
        assert!((d.apply(&f).unwrap() - &f).norm() <= 1e-9 * f.norm());
        let g = vecf(m, 2.0);
        assert!(d.interpolation_residuals(&g).unwrap().amax() < 1e-10 * g.amax());
        let sampled: Vec<f64> = d.selection().indices().iter().map(|&i| g[i]).collect();
        let a = d.apply(&g).unwrap();
        let b = d.apply_sampled(&sampled).unwrap();
        assert!((&a - &b).norm() <= 1e-12 * a.norm());
        let (lhs, orth) = d.errors(&g).unwrap();
        assert!(lhs <= d.error_constant() * orth * (1.0 + 1e-10));
        let exact = w.w_operator_norm(&d.assemble().unwrap()).unwrap();
        assert!((d.operator_norm().unwrap() - exact).abs() <= 1e-8 * exact);
        assert!(exact <= d.error_constant() * (1.0 + 1e-10));
    }
}

#[test]
fn scaled_diagonal_weight_matches_unweighted_selection() {
    let m = 22;
    let wd: Vec<f64> = (0..m).map(|i| 0.01 + (i as f64 * 0.9).sin().powi(2) * 50.0).collect();
    let w = WeightOperator::diagonal(wd).unwrap();
    let basis = pod_basis(&snapshots(m, 8), &w, RankSpec::Explicit(3)).unwrap();
    let d = build_wdeim_scaled_from_basis(&basis, Strategy::Srrqr, 2.0).unwrap();
    let sel = select_srrqr(basis.u_euclid(), 2.0).unwrap();
    assert_eq!(d.selection().indices(), sel.indices());
    let f = vecf(m, 0.4);
    assert!(d.interpolation_residuals(&f).unwrap().amax() < 1e-12 * f.amax());
    assert!((d.error_constant() - d.kernel_inv_norm()).abs() < 1e-12 * d.error_constant());
}

#[test]
fn scaled_is_scale_invariant() {
    let m = 24;
    let w = WeightOperator::dense(spd(m)).unwrap();
    let wc = w.scaled(1e6).unwrap();
    let y = snapshots(m, 9);
    let a = build_wdeim_scaled(&y, &w, RankSpec::Explicit(4), 2.0).unwrap();
    let b = build_wdeim_scaled(&y, &wc, RankSpec::Explicit(4), 2.0).unwrap();
    assert_eq!(a.selection().indices(), b.selection().indices());
    assert!(rel(&a.assemble().unwrap(), &b.assemble().unwrap()) < 1e-9);
}

#[test]
fn idempotent_for_every_variant() {
    let m = 20;
    let w = WeightOperator::dense(spd(m)).unwrap();
    let basis = pod_basis(&snapshots(m, 8), &w, RankSpec::Explicit(3)).unwrap();
    let sel = select_srrqr(basis.u_euclid(), 2.0).unwrap();
    let u = orth(m, 3, 0.9);
    let projectors = [
        build_deim(&u, &select_qdeim(&u).unwrap()).unwrap(),
        build_wdeim_generalized(&basis, &sel).unwrap(),
        build_wdeim_pointwise_from_basis(&basis, Strategy::Qdeim, 2.0).unwrap(),
        build_wdeim_scaled_from_basis(&basis, Strategy::DeimGreedy, 2.0).unwrap(),
    ];
    for d in &projectors {
        let dm = d.assemble().unwrap();
        assert!(rel(&(&dm * &dm), &dm) < 1e-9, "{}", d.variant());
        // D P = P.
        let p = basis.u_hat() * basis.u_hat().transpose() * w.to_dense();
        if d.variant() != Variant::Unweighted {
            assert!(rel(&(&dm * &p), &p) < 1e-9, "{}", d.variant());
        }
    }
}

#[test]
fn oversampled_cases() {
    // s = r agrees with classic DEIM.
    let u = orth(8, 2, 1.7);
    let sel = select_qdeim(&u).unwrap();
    let a = build_oversampled(&u, &sel).unwrap();
    assert_eq!(a.variant(), Variant::Unweighted);
    assert!((a.assemble().unwrap() - build_deim(&u, &sel).unwrap().assemble().unwrap()).amax() < 1e-14);

    // s < r: interpolation holds and projection fails.
    let u = orth(3, 2, 0.4);
    let sel = SelectionOperator::from_indices(&u, vec![0], Strategy::Qdeim, None).unwrap();
    assert!(build_deim(&u, &sel).is_err());
    let d = build_oversampled(&u, &sel).unwrap();
    let prop = d.property();
    assert!(prop.interpolation && !prop.projection);
    let f = Vector::from_vec(vec![1.0, -0.5, 2.0]);
    assert!(d.interpolation_residuals(&f).unwrap().amax() < 1e-14);
    let dm = d.assemble().unwrap();
    let p = &u * u.transpose();
    let k = select_rows(&u, &[0]);
    let pinv = k.transpose() / k.norm_squared();
    let oracle = &u * pinv * Matrix::from_row_slice(1, 3, &[1.0, 0.0, 0.0]);
    assert!((&dm - &oracle).amax() < 1e-14);
    let pf = &p * &f;
    assert!((&dm * &pf - &pf).norm() > 1e-3);
    assert!(d.error_decomposition(&f).is_err());

    // s > r: projection holds, interpolation is least squares.
    let u = orth(4, 1, 0.8);
    let sel = SelectionOperator::from_indices(&u, vec![0, 1, 2], Strategy::Qdeim, None).unwrap();
    let d = build_deim(&u, &sel).unwrap();
    assert_eq!(d.variant(), Variant::Oversampled);
    assert!(d.property().projection && !d.property().interpolation);
    let dm = d.assemble().unwrap();
    let p = &u * u.transpose();
    assert!((&dm * &p - &p).amax() < 1e-10);
    let f = Vector::from_vec(vec![0.3, 1.0, -2.0, 0.5]);
    let k = select_rows(&u, &[0, 1, 2]);
    let g = Matrix::from_column_slice(3, 1, &[f[0], f[1], f[2]]);
    let c = (k.tr_mul(&k)).try_inverse().unwrap() * k.tr_mul(&g);
    let ls_res = &g - &k * &c;
    let res = d.interpolation_residuals(&f).unwrap();
    assert!((res + ls_res.column(0)).amax() < 1e-12);
}

#[test]
fn oversampled_rank_collapse() {
    let mut u = Matrix::zeros(5, 2);
    u[(0, 0)] = 1.0;
    u[(1, 1)] = 1.0;
    let sel = SelectionOperator::from_indices(&u, vec![0, 3, 4], Strategy::Qdeim, None);
    assert!(matches!(sel, Err(DeimError::RankDeficient { .. })));
}

#[test]
fn canonical_structure_small() {
    // Sampled rows are exactly the support of U: no angles, norm 1.
    let u = Matrix::identity(6, 2);
    let d = build_deim(&u, &select_qdeim(&u).unwrap()).unwrap();
    let c = canonical_analysis(&d).unwrap();
    assert_eq!((c.ell, c.p, c.norm_d), (2, 0, 1.0));

    let u = orth(12, 3, 0.6);
    let d = build_deim(&u, &select_qdeim(&u).unwrap()).unwrap();
    let c = canonical_analysis_with_basis(&d).unwrap();
    let dm = d.assemble().unwrap();
    let two = spectral_norm(&dm).unwrap();
    let comp = spectral_norm(&(Matrix::identity(12, 12) - &dm)).unwrap();
    assert!((c.norm_d - two).abs() <= 1e-8 * two);
    assert!((comp - two).abs() <= 1e-8 * two);
    assert!((c.cs_norm() - two).abs() <= 1e-8 * two);

    let z = c.z_basis.as_ref().unwrap();
    assert!((z.tr_mul(z) - Matrix::identity(12, 12)).amax() < 1e-10);
    let t = z.transpose() * &dm * z;
    let mut expected = Matrix::zeros(12, 12);
    for i in 0..c.ell {
        expected[(i, i)] = 1.0;
    }
    for (b, _) in c.angles.iter().enumerate() {
        let o = c.ell + 2 * b;
        expected.view_mut((o, o), (2, 2)).copy_from(&c.block(b));
    }
    assert!((t - expected).amax() < 1e-9);
}

#[test]
fn error_decomposition_properties() {
    let u = orth(50, 5, 1.3);
    let d = build_deim(&u, &select_qdeim(&u).unwrap()).unwrap();
    let nd = canonical_analysis(&d).unwrap().norm_d;
    for t in 0..100 {
        let f = vecf(50, t as f64 * 0.37 + 0.1) + Vector::from_fn(50, |i, _| ((i * t) as f64).sin());
        let e = d.error_decomposition(&f).unwrap();
        assert!((e.total.powi(2) - e.orth_err.powi(2) - e.oblique_excess.powi(2)).abs() <= 1e-9 * e.total.powi(2));
        assert!(e.kappa_prime <= nd * (1.0 + 1e-12));
    }
    let inside = &u * Vector::from_element(5, 1.0);
    assert!(d.error_decomposition(&inside).is_err());

    // f orthogonal to range(U) with S-range = U-range: no excess.
    let u = Matrix::identity(4, 2);
    let d = build_deim(&u, &select_qdeim(&u).unwrap()).unwrap();
    let e = d.error_decomposition(&Vector::from_vec(vec![0.0, 0.0, 1.0, 2.0])).unwrap();
    assert_eq!(e.oblique_excess, 0.0);
    assert_eq!(e.kappa_prime, 1.0);
}

#[test]
fn solver_handles_permuted_square_kernel() {
    let k = Matrix::from_row_slice(2, 2, &[0.1, 3.0, 2.0, 0.5]);
    let s = Solver::new(&k).unwrap();
    let b = Matrix::from_column_slice(2, 1, &[1.0, -1.0]);
    let x = s.solve(&b);
    assert!((&k * x - &b).amax() < 1e-14);
}
