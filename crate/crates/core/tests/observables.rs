use approx::assert_relative_eq;
use num_complex::Complex64;
use rotapol_core::effective::{evolve, EffectiveModel, EvolveOptions, PotentialMode, Stepper};
use rotapol_core::grid::{rotate_field, TransverseGrid};
use rotapol_core::observables::*;
use rotapol_core::{states, Error, Sample, Trajectory};
use std::f64::consts::{PI, TAU};

fn sample(t: f64, x: f64, y: f64, norm_sqr: f64) -> Sample {
    Sample { time: t, norm_sqr, x, y, lz: 0.0, lz2: 0.0, energy: 0.0 }
}

fn circle(n: usize, t_end: f64, center: (f64, f64), r: f64, omega: f64, phase: f64) -> Trajectory {
    let mut tr = Trajectory::new(0.1);
    for i in 0..n {
        let t = t_end * i as f64 / (n - 1) as f64;
        let a = phase + omega * t;
        tr.samples.push(sample(t, center.0 + r * a.cos(), center.1 + r * a.sin(), 1.0));
    }
    tr
}

#[test]
fn centroid_cases() {
    let g = TransverseGrid::square(64, 24.0).unwrap();
    let f = states::gaussian(&g, (1.5, -2.0), 1.0, (0.7, 0.0)).unwrap();
    let (x, y) = centroid(&f).unwrap();
    assert_relative_eq!(x, 1.5, epsilon = 1e-12);
    assert_relative_eq!(y, -2.0, epsilon = 1e-12);
    let (x, y) = centroid(&states::hermite_gaussian(&g, 1, 1, 1.0).unwrap()).unwrap();
    assert!(x.abs() < 1e-14 && y.abs() < 1e-14);
    let z = rotapol_core::ComplexField2D::zeros(&g);
    assert_eq!(centroid(&z), Err(Error::ZeroNorm));
}

#[test]
fn line_fit_recovers_exact_line() {
    let xs: Vec<f64> = (0..10).map(|i| i as f64 * 0.3).collect();
    let ys: Vec<f64> = xs.iter().map(|x| -2.5 * x + 1.25).collect();
    let l = linear_fit(&xs, &ys).unwrap();
    assert_relative_eq!(l.slope, -2.5, max_relative = 1e-13);
    assert_relative_eq!(l.intercept, 1.25, max_relative = 1e-13);
    assert!(l.rms_residual < 1e-13);
    assert!(linear_fit(&[1.0], &[2.0]).is_err());
}

#[test]
fn synthetic_circle_is_recovered() {
    let tr = circle(40, 9.0, (1.0, -2.0), 3.0, -1.0, 0.4);
    let fit = fit_cyclotron(&tr).unwrap();
    assert_relative_eq!(fit.center.0, 1.0, epsilon = 1e-10);
    assert_relative_eq!(fit.center.1, -2.0, epsilon = 1e-10);
    assert_relative_eq!(fit.radius, 3.0, max_relative = 1e-12);
    assert_relative_eq!(fit.angular_frequency, -1.0, max_relative = 1e-12);
    assert_relative_eq!(fit.period(), TAU, max_relative = 1e-12);
    assert!(fit.rms_residual < 1e-10);
}

#[test]
fn perturbed_circle_reports_residual() {
    let mut tr = circle(60, 7.0, (0.0, 0.0), 2.0, 1.3, 0.0);
    for (i, s) in tr.samples.iter_mut().enumerate() {
        let wobble = 1.0 + 0.01 * (7.0 * i as f64).sin();
        s.x *= wobble;
        s.y *= wobble;
    }
    let fit = fit_cyclotron(&tr).unwrap();
    assert!((fit.radius - 2.0).abs() < 0.01);
    assert!((fit.angular_frequency - 1.3).abs() < 0.01);
    assert!(fit.rms_residual > 1e-3 && fit.rms_residual < 0.03);
}

#[test]
fn orbit_fit_rejections() {
    assert!(matches!(fit_cyclotron(&circle(7, 9.0, (0.0, 0.0), 3.0, 1.0, 0.0)), Err(Error::InsufficientSamples(_))));
    assert!(matches!(fit_cyclotron(&circle(20, 2.0, (0.0, 0.0), 3.0, 1.0, 0.0)), Err(Error::InsufficientSamples(_))));
    assert!(matches!(fit_cyclotron(&circle(20, 9.0, (0.0, 0.0), 0.15, 1.0, 0.0)), Err(Error::DegenerateOrbit(_))));
    let mut line = Trajectory::new(0.1);
    for i in 0..20 {
        let t = i as f64 * 0.1;
        line.samples.push(sample(t, 0.5 * t, -0.25 * t, 1.0));
    }
    assert!(matches!(fit_cyclotron(&line), Err(Error::DegenerateOrbit(_))));
}

fn opts(dt: f64) -> EvolveOptions {
    EvolveOptions { dt: Some(dt), ..Default::default() }
}

#[test]
fn kicked_packet_circles_at_cyclotron_frequency() {
    let g = TransverseGrid::square(128, 64.0).unwrap();
    let p0 = 3.0;
    let f = states::gaussian(&g, (0.0, 0.0), 2f64.sqrt(), (p0, 0.0)).unwrap();
    let ev = evolve(&f, &EffectiveModel::landau(), TAU, Stepper::Strang, 20, &opts(0.005)).unwrap();
    let fit = fit_cyclotron(&ev.trajectory).unwrap();
    assert!((fit.radius - p0).abs() < 1e-3 * p0, "{fit:?}");
    assert!((fit.period() - TAU).abs() < 1e-3 * TAU, "{fit:?}");
    assert!(fit.rms_residual < 1e-3);
}

#[test]
fn without_rotation_the_packet_drifts_straight() {
    let g = TransverseGrid::square(128, 64.0).unwrap();
    let f = states::gaussian(&g, (-3.0, 0.0), 2.0, (1.0, 0.5)).unwrap();
    let ev = evolve(&f, &EffectiveModel::free(), 2.0, Stepper::Strang, 5, &opts(0.05)).unwrap();
    assert!(matches!(fit_cyclotron(&ev.trajectory), Err(Error::DegenerateOrbit(_))));
}

fn lopsided(g: &TransverseGrid) -> rotapol_core::ComplexField2D {
    let mut f = states::gaussian(g, (2.0, 0.0), 1.0, (0.0, 0.0)).unwrap();
    f.add_scaled(Complex64::new(0.5, 0.0), &states::gaussian(g, (0.0, 1.5), 0.8, (0.0, 0.0)).unwrap()).unwrap();
    f.normalized().unwrap()
}

#[test]
fn rotation_angle_self_consistency() {
    let g = TransverseGrid::square(128, 40.0).unwrap();
    let f0 = lopsided(&g);
    assert_eq!(symmetry_order(&f0).unwrap(), 1);
    for phi in [0.3, -1.1, 2.5] {
        let ft = rotate_field(&f0, phi).unwrap();
        let got = image_rotation_angle(&ft, &f0).unwrap();
        assert!((got - phi).abs() < 1e-6, "{phi}: {got}");
    }
}

#[test]
fn two_fold_symmetric_mode_is_searched_over_half_turn() {
    let g = TransverseGrid::square(128, 40.0).unwrap();
    let f0 = states::hermite_gaussian(&g, 1, 0, 1.5).unwrap();
    assert_eq!(symmetry_order(&f0).unwrap(), 2);
    let ft = rotate_field(&f0, 0.3).unwrap();
    assert!((image_rotation_angle(&ft, &f0).unwrap() - 0.3).abs() < 1e-6);
    let ft = rotate_field(&f0, 0.3 + PI).unwrap();
    assert!((image_rotation_angle(&ft, &f0).unwrap() - 0.3).abs() < 1e-6);
}

#[test]
fn isotropic_image_is_ambiguous() {
    let g = TransverseGrid::square(64, 40.0).unwrap();
    let f0 = states::gaussian(&g, (0.0, 0.0), 1.2, (0.0, 0.0)).unwrap();
    assert_eq!(image_rotation_angle(&f0, &f0), Err(Error::AmbiguousRotation));
}

#[test]
fn unrelated_image_is_rejected() {
    let g = TransverseGrid::square(128, 40.0).unwrap();
    let f0 = states::gaussian(&g, (2.0, 0.0), 0.7, (0.0, 0.0)).unwrap();
    let ft = states::hermite_gaussian(&g, 3, 3, 0.6).unwrap();
    assert_eq!(image_rotation_angle(&ft, &f0), Err(Error::AmbiguousRotation));
}

#[test]
fn dragged_image_turns_at_the_drag_rate() {
    let g = TransverseGrid::square(128, 48.0).unwrap();
    let omega = 0.2;
    let model = EffectiveModel::rotating(omega, PotentialMode::Full);
    let f0 = states::hermite_gaussian(&g, 1, 0, 1.5).unwrap();
    let mut times = Vec::new();
    let mut angles = Vec::new();
    rotapol_core::effective::evolve_with(&f0, &model, 2.0, Stepper::Rk4, 50, &opts(0.005), |_, t, f| {
        if t > 0.0 {
            times.push(t);
            angles.push(image_rotation_angle(f, &f0).unwrap());
        }
        Ok(())
    })
    .unwrap();
    let line = linear_fit(&times, &angles).unwrap();
    assert!((line.slope - omega).abs() < 1e-5, "{line:?}");
    assert!(line.intercept.abs() < 1e-5);
}

#[test]
fn decay_fit() {
    let mut tr = Trajectory::new(0.1);
    for i in 0..12 {
        let t = 0.25 * i as f64;
        tr.samples.push(sample(t, 0.0, 0.0, 0.8 * (-2.0 * 0.37 * t).exp()));
    }
    assert_relative_eq!(norm_decay_rate(&tr).unwrap(), 0.37, max_relative = 1e-12);
    tr.samples.truncate(4);
    assert!(matches!(norm_decay_rate(&tr), Err(Error::InsufficientSamples(_))));
    let mut bad = circle(6, 1.0, (0.0, 0.0), 1.0, 1.0, 0.0);
    bad.samples[3].norm_sqr = 0.0;
    assert_eq!(norm_decay_rate(&bad), Err(Error::NonPositiveNorm));
}
