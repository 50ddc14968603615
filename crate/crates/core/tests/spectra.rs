use nalgebra::DMatrix;
use num_complex::Complex64;
use rotapol_core::effective::{EffectiveModel, PotentialMode};
use rotapol_core::spectra::*;
use rotapol_core::{states, Error, TransverseGrid};
use std::f64::consts::TAU;

fn dense_spectrum(op: &mut OperatorHandle) -> Vec<f64> {
    let n = op.dim();
    let mut a = DMatrix::<Complex64>::zeros(n, n);
    let mut e = vec![Complex64::new(0.0, 0.0); n];
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..n {
        e[j] = Complex64::new(1.0, 0.0);
        op.apply_raw(&e, &mut col);
        e[j] = Complex64::new(0.0, 0.0);
        for i in 0..n {
            a[(i, j)] = col[i];
        }
    }
    let herm = (&a + a.adjoint()) * Complex64::new(0.5, 0.0);
    assert!((&a - &herm).norm() < 1e-9 * a.norm());
    let mut v: Vec<f64> = herm.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(|x, y| x.partial_cmp(y).unwrap());
    v
}

fn anisotropic_trap() -> EffectiveModel {
    let mut m = EffectiveModel::rotating(0.3, PotentialMode::Compensated);
    m.harmonic = 0.3;
    m
}

#[test]
fn matches_dense_diagonalisation() {
    let g = TransverseGrid::square(16, 10.0).unwrap();
    let mut op = OperatorHandle::new(&g, &anisotropic_trap()).unwrap();
    let oracle = dense_spectrum(&mut op);
    let pairs = lowest_eigenpairs(&mut op, 12, &EigenOptions::default()).unwrap();
    assert!(pairs.len() >= 12);
    for (i, v) in pairs.values.iter().enumerate() {
        assert!((v - oracle[i]).abs() < 1e-8 * oracle[i].abs().max(1.0), "{i}: {v} vs {}", oracle[i]);
    }
    for r in &pairs.residuals {
        assert!(*r < 1e-7);
    }
}

#[test]
fn landau_model_matches_dense_diagonalisation() {
    let g = TransverseGrid::square(16, 8.0).unwrap();
    let mut op = OperatorHandle::new(&g, &EffectiveModel::landau()).unwrap();
    let oracle = dense_spectrum(&mut op);
    let pairs = lowest_eigenpairs(&mut op, 20, &EigenOptions::default()).unwrap();
    for (i, v) in pairs.values.iter().enumerate() {
        assert!((v - oracle[i]).abs() < 1e-8, "{i}: {v} vs {}", oracle[i]);
    }
}

#[test]
fn free_box_multiplicities() {
    let g = TransverseGrid::square(16, TAU).unwrap();
    let mut op = OperatorHandle::new(&g, &EffectiveModel::free()).unwrap();
    let pairs = lowest_eigenpairs(&mut op, 9, &EigenOptions::default()).unwrap();
    let clusters = cluster_values(&pairs.values, 1e-8);
    let summary: Vec<(f64, usize)> = clusters.iter().map(|c| ((c.center * 1e8).round() / 1e8, c.count)).collect();
    assert_eq!(summary, vec![(0.0, 1), (0.5, 4), (1.0, 4)]);
}

#[test]
fn eigenvectors_are_orthonormal() {
    let g = TransverseGrid::square(16, 10.0).unwrap();
    let mut op = OperatorHandle::new(&g, &anisotropic_trap()).unwrap();
    let pairs = lowest_eigenpairs(&mut op, 8, &EigenOptions::default()).unwrap();
    for (i, a) in pairs.vectors.iter().enumerate() {
        for (j, b) in pairs.vectors.iter().enumerate() {
            let o = a.inner(b).unwrap();
            let expect = if i == j { 1.0 } else { 0.0 };
            assert!((o - Complex64::new(expect, 0.0)).norm() < 1e-10);
        }
    }
}

#[test]
fn seeds_agree_on_eigenvalues() {
    let g = TransverseGrid::square(32, 12.0).unwrap();
    let mut op = OperatorHandle::new(&g, &anisotropic_trap()).unwrap();
    let a = lowest_eigenpairs(&mut op, 10, &EigenOptions { seed: 1, ..Default::default() }).unwrap();
    let b = lowest_eigenpairs(&mut op, 10, &EigenOptions { seed: 77, ..Default::default() }).unwrap();
    for (x, y) in a.values.iter().zip(&b.values) {
        assert!((x - y).abs() < 1e-9);
    }
}

#[test]
fn same_seed_is_bit_reproducible() {
    let g = TransverseGrid::square(16, 10.0).unwrap();
    let mut op = OperatorHandle::new(&g, &anisotropic_trap()).unwrap();
    let a = lowest_eigenpairs(&mut op, 6, &EigenOptions::default()).unwrap();
    let b = lowest_eigenpairs(&mut op, 6, &EigenOptions::default()).unwrap();
    assert_eq!(a.values, b.values);
    assert_eq!(a.vectors, b.vectors);
}

#[test]
fn lossy_models_are_refused() {
    let g = TransverseGrid::square(16, 10.0).unwrap();
    let m = EffectiveModel::landau().with_rot_loss(Complex64::new(0.01, 0.0));
    assert!(matches!(OperatorHandle::new(&g, &m), Err(Error::NonHermitianConfig)));
    let mass_only = EffectiveModel::landau().with_rot_loss(Complex64::new(0.0, 0.01));
    assert!(OperatorHandle::new(&g, &mass_only).is_ok());
}

#[test]
fn operator_is_hermitian_on_smooth_fields() {
    let g = TransverseGrid::square(64, 16.0).unwrap();
    let mut op = OperatorHandle::new(&g, &EffectiveModel::landau()).unwrap();
    let f = states::gaussian(&g, (0.5, 0.0), 1.0, (0.3, -0.2)).unwrap();
    let h = states::hermite_gaussian(&g, 1, 1, 1.2).unwrap();
    assert!(op.hermiticity_defect(&f, &h).unwrap() < 1e-12);
}

fn landau(extent: f64) -> SpectrumReport {
    let g = TransverseGrid::square(64, extent).unwrap();
    let mut op = OperatorHandle::new(&g, &EffectiveModel::landau()).unwrap();
    let pairs = lowest_eigenpairs(&mut op, 48, &EigenOptions::default()).unwrap();
    landau_analysis(&pairs, 1.0, DEFAULT_CLUSTER_TOL).unwrap()
}

#[test]
fn lowest_level_count_follows_enclosed_flux() {
    let small = landau(16.0);
    assert!((small.eigenvalues[0] - 0.5).abs() < 1e-6);
    assert!((small.flux_count.unwrap() - 5.12).abs() < 1e-12);
    assert_eq!(small.lowest_cluster_count, Some(5));
    assert_eq!(small.agreement, Some(true));
    let large = landau(19.0);
    assert!((large.flux_count.unwrap() - 7.22).abs() < 1e-12);
    assert_eq!(large.lowest_cluster_count, Some(7));
    assert_eq!(large.agreement, Some(true));
    for (i, r) in small.mean_rho_sq.iter().take(4).enumerate() {
        assert!((r - 2.0 * (i as f64 + 1.0)).abs() < 1e-3, "{i}: {r}");
    }
}

#[test]
fn clusters_are_greedy_in_sorted_order() {
    let c = cluster_values(&[0.0, 0.05, 0.09, 0.12, 1.0, 1.01], 0.1);
    let counts: Vec<usize> = c.iter().map(|c| c.count).collect();
    assert_eq!(counts, vec![3, 1, 2]);
    assert!(cluster_values(&[], 0.1).is_empty());
}
