use approx::assert_relative_eq;
use num_complex::Complex64;
use proptest::prelude::*;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rotapol_core::grid::*;
use rotapol_core::states;
use rotapol_core::Error;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 - 0.5
}

fn random_values(n: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| Complex64::new(unit(&mut rng), unit(&mut rng))).collect()
}

fn naive_dft_2d(v: &[Complex64], nx: usize, ny: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); nx * ny];
    for kx in 0..nx {
        for ky in 0..ny {
            let mut acc = Complex64::new(0.0, 0.0);
            for jx in 0..nx {
                for jy in 0..ny {
                    let a = -TAU * ((jx * kx) as f64 / nx as f64 + (jy * ky) as f64 / ny as f64);
                    acc += v[jx * ny + jy] * Complex64::new(a.cos(), a.sin());
                }
            }
            out[kx * ny + ky] = acc;
        }
    }
    out
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn transform_matches_direct_sum() {
    let g = TransverseGrid::new(16, 8, 3.0, 5.0).unwrap();
    let v = random_values(g.len(), 7);
    let mut f = v.clone();
    g.transform_2d(&mut f, true);
    let oracle = naive_dft_2d(&v, 16, 8);
    assert!(max_diff(&f, &oracle) < 1e-12);
    g.transform_2d(&mut f, false);
    assert!(max_diff(&f, &v) < 1e-15);
}

#[test]
fn parseval() {
    let g = TransverseGrid::new(32, 64, 10.0, 10.0).unwrap();
    let v = random_values(g.len(), 3);
    let mut f = v.clone();
    g.transform_2d(&mut f, true);
    let e_x: f64 = v.iter().map(|c| c.norm_sqr()).sum();
    let e_k: f64 = f.iter().map(|c| c.norm_sqr()).sum();
    assert_relative_eq!(e_k, g.len() as f64 * e_x, max_relative = 1e-13);
}

#[test]
fn coordinates_are_centred() {
    let g = TransverseGrid::new(16, 32, 8.0, 4.0).unwrap();
    assert_eq!(g.x()[8], 0.0);
    assert_eq!(g.y()[16], 0.0);
    assert_relative_eq!(g.x()[0], -4.0);
    assert_relative_eq!(g.dx(), 0.5);
    assert_relative_eq!(g.dy(), 0.125);
    assert_relative_eq!(g.cell_area(), 0.0625);
    assert_relative_eq!(g.kx_max(), PI / 0.5);
    assert_relative_eq!(g.safety_radius(), 0.4 * 2.0);
}

#[test]
fn laplacian_of_gaussian_matches_closed_form() {
    let g = TransverseGrid::square(128, 24.0).unwrap();
    let w = 1.3;
    let f = ComplexField2D::from_fn(&g, |x, y| Complex64::new((-(x * x + y * y) / (2.0 * w * w)).exp(), 0.0));
    let lap = laplacian_transverse(&f).unwrap();
    let oracle = ComplexField2D::from_fn(&g, |x, y| {
        let r2 = x * x + y * y;
        Complex64::new((r2 / w.powi(4) - 2.0 / (w * w)) * (-r2 / (2.0 * w * w)).exp(), 0.0)
    });
    assert!(max_diff(lap.values(), oracle.values()) < 1e-12);
}

#[test]
fn laplacian_agrees_with_fourth_order_stencil() {
    // A stencil oracle on successively finer grids: the gap shrinks as h⁴.
    let mut gaps = Vec::new();
    for n in [32usize, 64] {
        let g = TransverseGrid::square(n, 16.0).unwrap();
        let f = ComplexField2D::from_fn(&g, |x, y| {
            Complex64::from_polar((-(x * x + 2.0 * y * y) / 4.0).exp(), 0.3 * x - 0.2 * y)
        });
        let lap = laplacian_transverse(&f).unwrap();
        let h = g.dx();
        let at = |ix: isize, iy: isize| {
            let ix = ix.rem_euclid(n as isize) as usize;
            let iy = iy.rem_euclid(n as isize) as usize;
            f.values()[ix * n + iy]
        };
        let mut gap: f64 = 0.0;
        for ix in 0..n as isize {
            for iy in 0..n as isize {
                let d2 = |dx: isize, dy: isize| {
                    (-at(ix + 2 * dx, iy + 2 * dy) + at(ix + dx, iy + dy) * 16.0 - at(ix, iy) * 30.0
                        + at(ix - dx, iy - dy) * 16.0
                        - at(ix - 2 * dx, iy - 2 * dy))
                        / (12.0 * h * h)
                };
                let stencil = d2(1, 0) + d2(0, 1);
                gap = gap.max((stencil - lap.values()[ix as usize * n + iy as usize]).norm());
            }
        }
        gaps.push(gap);
    }
    let order = (gaps[0] / gaps[1]).log2();
    assert!(order > 3.5, "gaps {gaps:?}");
}

#[test]
fn laplacian_and_lz_are_hermitian() {
    let g = TransverseGrid::square(32, 12.0).unwrap();
    let a = ComplexField2D::new(g.clone(), random_values(g.len(), 11)).unwrap();
    let b = ComplexField2D::new(g.clone(), random_values(g.len(), 12)).unwrap();
    let la = laplacian_transverse(&a).unwrap();
    let lb = laplacian_transverse(&b).unwrap();
    let lhs = a.inner(&lb).unwrap();
    let rhs = la.inner(&b).unwrap();
    assert!((lhs - rhs).norm() < 1e-10 * lhs.norm());
    let za = apply_lz_unchecked(&a);
    let zb = apply_lz_unchecked(&b);
    let lhs = a.inner(&zb).unwrap();
    let rhs = za.inner(&b).unwrap();
    assert!((lhs - rhs).norm() < 1e-10 * lhs.norm());
}

#[test]
fn vortex_angular_momentum() {
    let g = TransverseGrid::square(128, 32.0).unwrap();
    for m in [-3, -1, 0, 2] {
        let f = states::vortex(&g, m, 1.5).unwrap();
        let lz = expectation(&f, Observable::Lz).unwrap();
        let lz2 = expectation(&f, Observable::Lz2).unwrap();
        assert!((lz.re - m as f64).abs() < 1e-9, "m = {m}: {lz}");
        assert!(lz.im.abs() < 1e-12);
        assert!((lz2.re - (m * m) as f64).abs() < 1e-8);
    }
}

#[test]
fn plane_wave_kinetic_energy() {
    let g = TransverseGrid::square(32, 10.0).unwrap();
    let k = TAU / 10.0 * 3.0;
    let f = ComplexField2D::from_fn(&g, |x, _| Complex64::from_polar(1.0, k * x));
    let e = expectation(&f, Observable::KineticPerp).unwrap();
    assert_relative_eq!(e.re, 0.5 * k * k, max_relative = 1e-12);
}

#[test]
fn centroid_of_offset_gaussian() {
    let g = TransverseGrid::square(64, 24.0).unwrap();
    let f = states::gaussian(&g, (1.25, -0.5), 1.0, (0.0, 0.0)).unwrap();
    assert_relative_eq!(expectation(&f, Observable::X).unwrap().re, 1.25, epsilon = 1e-12);
    assert_relative_eq!(expectation(&f, Observable::Y).unwrap().re, -0.5, epsilon = 1e-12);
}

fn fine() -> TransverseGrid {
    TransverseGrid::square(128, 40.0).unwrap()
}

#[test]
fn rotated_gaussian_lands_on_rotated_centre() {
    let g = fine();
    let f = states::gaussian(&g, (2.0, 0.0), 0.8, (0.0, 0.0)).unwrap();
    for phi in [0.3, 1.2, -2.0, 3.0] {
        let r = rotate_field(&f, phi).unwrap();
        let oracle = states::gaussian(&g, (2.0 * phi.cos(), 2.0 * phi.sin()), 0.8, (0.0, 0.0)).unwrap();
        assert!(r.distance(&oracle).unwrap() < 1e-9, "phi = {phi}");
    }
}

#[test]
fn quarter_turn_maps_hg10_to_hg01() {
    let g = fine();
    let hg10 = states::hermite_gaussian(&g, 1, 0, 1.5).unwrap();
    let hg01 = states::hermite_gaussian(&g, 0, 1, 1.5).unwrap();
    let r = rotate_field(&hg10, FRAC_PI_2).unwrap();
    assert!(r.distance(&hg01).unwrap() < 1e-9);
    let back = rotate_field(&hg10, -FRAC_PI_2).unwrap();
    let mut neg = hg01.clone();
    neg.scale(Complex64::new(-1.0, 0.0));
    assert!(back.distance(&neg).unwrap() < 1e-9);
}

#[test]
fn vortex_picks_up_phase_under_rotation() {
    let g = fine();
    let m = 2;
    let f = states::vortex(&g, m, 1.5).unwrap();
    let phi = 0.7;
    let r = rotate_field(&f, phi).unwrap();
    let mut oracle = f.clone();
    oracle.scale(Complex64::from_polar(1.0, -(m as f64) * phi));
    assert!(r.distance(&oracle).unwrap() < 1e-9);
}

#[test]
fn rotations_compose_and_invert() {
    let g = fine();
    let f = states::hermite_gaussian(&g, 2, 1, 1.2).unwrap();
    let (a, b) = (0.4, 1.1);
    let ab = rotate_field(&rotate_field(&f, a).unwrap(), b).unwrap();
    let direct = rotate_field(&f, a + b).unwrap();
    assert!(ab.distance(&direct).unwrap() < 1e-9);
    let back = rotate_field(&rotate_field(&f, 2.5).unwrap(), -2.5).unwrap();
    assert!(back.distance(&f).unwrap() < 1e-9);
    let full = rotate_field(&f, TAU).unwrap();
    assert!(full.distance(&f).unwrap() < 1e-12);
}

#[test]
fn rotation_refuses_leaky_fields() {
    let g = TransverseGrid::square(64, 16.0).unwrap();
    let f = states::gaussian(&g, (5.0, 0.0), 1.0, (0.0, 0.0)).unwrap();
    assert!(matches!(rotate_field(&f, 0.1), Err(Error::EdgeLeakage { .. })));
    assert!(matches!(apply_lz(&f), Err(Error::EdgeLeakage { .. })));
}

#[test]
fn snapshot_round_trip_is_bit_exact() {
    let g = TransverseGrid::new(16, 32, 7.5, 3.25).unwrap();
    let f = ComplexField2D::new(g.clone(), random_values(g.len(), 99)).unwrap();
    let bytes = encode_snapshot(&f, 1.625);
    assert_eq!(bytes.len(), SNAPSHOT_HEADER_LEN + 16 * g.len());
    assert_eq!(&bytes[..4], b"SLPF");
    assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 16);
    assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 32);
    assert_eq!(f64::from_le_bytes(bytes[16..24].try_into().unwrap()), 7.5);
    let (back, t) = decode_snapshot(&bytes).unwrap();
    assert_eq!(t, 1.625);
    assert_eq!(back.grid().nx(), 16);
    assert_eq!(back.grid().extent_y(), 3.25);
    for (a, b) in back.values().iter().zip(f.values()) {
        assert_eq!(a.re.to_bits(), b.re.to_bits());
        assert_eq!(a.im.to_bits(), b.im.to_bits());
    }
    assert_eq!(encode_snapshot(&back, t), bytes);
}

#[test]
fn snapshot_rejects_damaged_files() {
    let g = TransverseGrid::square(8, 1.0).unwrap();
    let bytes = encode_snapshot(&states::uniform(&g), 0.0);
    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert_eq!(decode_snapshot(&bad).unwrap_err(), Error::BadMagic);
    let mut bad = bytes.clone();
    bad[4] = 2;
    assert_eq!(decode_snapshot(&bad).unwrap_err(), Error::VersionMismatch { found: 2, expected: 1 });
    assert!(matches!(decode_snapshot(&bytes[..bytes.len() - 1]), Err(Error::TruncatedFile { .. })));
    assert!(matches!(decode_snapshot(&bytes[..20]), Err(Error::TruncatedFile { .. })));
    let mut long = bytes.clone();
    long.push(0);
    assert_eq!(decode_snapshot(&long).unwrap_err(), Error::TrailingData { extra: 1 });
}

#[test]
fn mismatched_grids_are_rejected() {
    let a = states::uniform(&TransverseGrid::square(8, 1.0).unwrap());
    let b = states::uniform(&TransverseGrid::square(8, 2.0).unwrap());
    assert_eq!(a.inner(&b).unwrap_err(), Error::GridMismatch);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rotation_preserves_norm(cx in -1.5f64..1.5, cy in -1.5f64..1.5, phi in -7.0f64..7.0) {
        let g = TransverseGrid::square(128, 48.0).unwrap();
        let f = states::gaussian(&g, (cx, cy), 1.0, (0.0, 0.0)).unwrap();
        let r = rotate_field(&f, phi).unwrap();
        prop_assert!((r.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wrapped_angles_stay_in_range(a in -100.0f64..100.0) {
        let w = wrap_angle(a);
        prop_assert!(w > -PI && w <= PI);
        let turns = (a - w) / TAU;
        prop_assert!((turns - turns.round()).abs() < 1e-9);
    }

    #[test]
    fn snapshots_round_trip(seed in any::<u64>(), t in -1e6f64..1e6) {
        let g = TransverseGrid::new(8, 16, 2.0, 3.0).unwrap();
        let f = ComplexField2D::new(g.clone(), random_values(g.len(), seed)).unwrap();
        let (back, tb) = decode_snapshot(&encode_snapshot(&f, t)).unwrap();
        prop_assert_eq!(tb.to_bits(), t.to_bits());
        prop_assert_eq!(back, f);
    }
}
