use approx::assert_relative_eq;
use num_complex::Complex64;
use rotapol_core::effective::*;
use rotapol_core::grid::{rotate_field, ComplexField2D, TransverseGrid};
use rotapol_core::observables::norm_decay_rate;
use rotapol_core::params::{derive_quantities, MediumParams, RotationGeometry};
use rotapol_core::states;
use rotapol_core::Error;
use std::f64::consts::{PI, TAU};

fn grid() -> TransverseGrid {
    TransverseGrid::square(64, 40.0).unwrap()
}

fn opts(dt: f64) -> EvolveOptions {
    EvolveOptions { dt: Some(dt), ..Default::default() }
}

fn run(f: &ComplexField2D, model: &EffectiveModel, t: f64, stepper: Stepper, dt: f64) -> ComplexField2D {
    evolve(f, model, t, stepper, usize::MAX, &opts(dt)).unwrap().final_field
}

/// A compact state with components in several Landau levels and angular momenta.
fn mixed_state(g: &TransverseGrid) -> ComplexField2D {
    let mut f = states::gaussian(g, (0.8, -0.4), 1.4, (0.3, 0.0)).unwrap();
    f.add_scaled(Complex64::new(0.0, 0.5), &states::landau_vortex(g, 1, 1.0).unwrap()).unwrap();
    f.add_scaled(Complex64::new(0.3, 0.0), &states::landau_vortex(g, -2, 1.0).unwrap()).unwrap();
    f.normalized().unwrap()
}

/// The Landau spectrum is {n + ½}, so one cyclotron period maps ψ to −ψ.
fn period_error(stepper: Stepper, dt: f64) -> f64 {
    let g = TransverseGrid::square(128, 40.0).unwrap();
    let f = mixed_state(&g);
    let out = run(&f, &EffectiveModel::landau(), TAU, stepper, dt);
    let mut target = f.clone();
    target.scale(Complex64::new(-1.0, 0.0));
    out.distance(&target).unwrap()
}

#[test]
fn landau_period_is_a_sign_flip() {
    assert!(period_error(Stepper::Rk4, 0.0025) < 1e-8);
}

#[test]
fn rk4_converges_at_fourth_order() {
    let e: Vec<f64> = [0.005, 0.0025].iter().map(|&dt| period_error(Stepper::Rk4, dt)).collect();
    let order = (e[0] / e[1]).log2();
    assert!(order > 3.7 && order < 4.3, "errors {e:?}");
}

#[test]
fn strang_converges_at_second_order() {
    let e: Vec<f64> = [0.04, 0.02, 0.01].iter().map(|&dt| period_error(Stepper::Strang, dt)).collect();
    for w in e.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order > 1.9 && order < 2.1, "errors {e:?}");
    }
}

#[test]
fn lowest_level_states_rotate_at_half_frequency() {
    let g = grid();
    let t = 1.7;
    for m in [0, -1, -3] {
        let f = states::landau_vortex(&g, m, 1.0).unwrap();
        let out = run(&f, &EffectiveModel::landau(), t, Stepper::Rk4, 0.005);
        let overlap = f.inner(&out).unwrap();
        assert!((overlap - Complex64::from_polar(1.0, -0.5 * t)).norm() < 1e-8, "m = {m}: {overlap}");
    }
}

#[test]
fn landau_vortex_is_an_eigenstate() {
    let g = grid();
    for (m, e) in [(-2, 0.5), (0, 0.5), (1, 1.5), (2, 2.5)] {
        let f = states::landau_vortex(&g, m, 1.0).unwrap();
        let hf = apply_hamiltonian(&f, &EffectiveModel::landau()).unwrap();
        let mut r = hf.clone();
        r.add_scaled(Complex64::new(-e, 0.0), &f).unwrap();
        assert!(r.norm() < 1e-9, "m = {m}: {}", r.norm());
    }
}

#[test]
fn strang_is_unitary_over_many_steps() {
    let g = grid();
    let f = mixed_state(&g);
    let model = EffectiveModel::landau();
    let prop = StrangPropagator::new(&g, &model, 0.01).unwrap();
    let mut u = f.values().to_vec();
    for _ in 0..10_000 {
        prop.step(&mut u);
    }
    let out = ComplexField2D::new(g.clone(), u).unwrap();
    assert!((out.norm_sqr() - 1.0).abs() < 1e-11);
}

#[test]
fn energy_is_conserved_without_loss() {
    let g = grid();
    let f = mixed_state(&g);
    let ev = evolve(&f, &EffectiveModel::landau(), 5.0, Stepper::Rk4, 50, &opts(0.005)).unwrap();
    let e0 = ev.trajectory.samples[0].energy;
    for s in &ev.trajectory.samples {
        assert!((s.energy - e0).abs() < 1e-8 * e0.abs());
        assert!((s.norm_sqr - 1.0).abs() < 1e-8);
    }
}

#[test]
fn loss_scales_with_angular_momentum_squared() {
    let g = grid();
    let gamma = 0.02;
    let model = EffectiveModel::landau().with_rot_loss(Complex64::new(gamma, 0.0));
    for m in [0, -1, -2, -3] {
        let f = states::landau_vortex(&g, m, 1.0).unwrap();
        let ev = evolve(&f, &model, 2.0, Stepper::Rk4, 20, &opts(0.0025)).unwrap();
        let rate = norm_decay_rate(&ev.trajectory).unwrap();
        let expect = gamma * (m * m) as f64;
        assert!((rate - expect).abs() < 1e-8, "m = {m}: {rate}");
    }
}

#[test]
fn longitudinal_mode_decays_at_its_real_rate() {
    let g = grid();
    let model = EffectiveModel::landau().with_kz_decay(Complex64::new(0.3, 0.7));
    let f = mixed_state(&g);
    for stepper in [Stepper::Rk4, Stepper::Strang] {
        let ev = evolve(&f, &model, 1.0, stepper, 10, &opts(0.005)).unwrap();
        let expect = (-0.6f64).exp();
        assert_relative_eq!(ev.final_field.norm_sqr(), expect, max_relative = 1e-9);
        let plain = run(&f, &EffectiveModel::landau(), 1.0, stepper, 0.005);
        let mut oracle = plain.clone();
        oracle.scale((-Complex64::new(0.3, 0.7)).exp());
        assert!(ev.final_field.distance(&oracle).unwrap() < 1e-12);
    }
}

#[test]
fn uncompensated_rotation_is_a_rigid_turn_of_free_motion() {
    let g = TransverseGrid::square(128, 64.0).unwrap();
    let f = states::hermite_gaussian(&g, 1, 0, 1.5).unwrap();
    let omega = 0.37;
    let t = 2.0;
    let rotating = EffectiveModel::rotating(omega, PotentialMode::Full);
    assert_eq!(rotating.quadratic_coefficient(), 0.0);
    let direct = run(&f, &rotating, t, Stepper::Rk4, 0.005);
    let free = run(&f, &EffectiveModel::free(), t, Stepper::Strang, 0.01);
    let turned = rotate_field(&free, omega * t).unwrap();
    let e = direct.distance(&turned).unwrap();
    assert!(e < 1e-9, "{e}");
}

#[test]
fn ground_state_energy_is_half() {
    let gs = ground_state(&EffectiveModel::landau(), &grid(), 1.0, &GroundStateOptions::default()).unwrap();
    assert!((gs.energy - 0.5).abs() < 1e-6, "{}", gs.energy);
    assert!(!gs.unconfined);
}

#[test]
fn free_ground_state_reports_unconfined() {
    let opts = GroundStateOptions { max_iterations: 200_000, ..Default::default() };
    let gs = ground_state(&EffectiveModel::free(), &grid(), 1.0, &opts).unwrap();
    assert!(gs.unconfined);
    assert!(gs.energy > 0.0);
}

#[test]
fn reference_medium_maps_to_landau_units() {
    let m = MediumParams::reference_p0();
    let geom = RotationGeometry::reference_p0();
    let d = derive_quantities(&m, &geom).unwrap();
    let (model, units) = EffectiveConfig::new(d, PotentialMode::Compensated).model(1.0).unwrap();
    assert_relative_eq!(model.kinetic, 0.5, max_relative = 1e-12);
    assert_relative_eq!(model.rotation, 0.5, max_relative = 1e-12);
    assert_relative_eq!(model.harmonic, 0.125, max_relative = 1e-12);
    assert_relative_eq!(units.length, d.l_mag.unwrap(), max_relative = 1e-15);
    assert_relative_eq!(units.time, 1.0 / d.omega_c, max_relative = 1e-15);
    let (full, _) = EffectiveConfig::new(d, PotentialMode::Full).model(1.0).unwrap();
    assert_eq!(full.quadratic_coefficient(), 0.0);
}

#[test]
fn reversed_rotation_flips_the_drag() {
    let m = MediumParams::reference_p0();
    let mut geom = RotationGeometry::reference_p0();
    geom.nu = -geom.nu;
    let d = derive_quantities(&m, &geom).unwrap();
    let (model, _) = EffectiveConfig::new(d, PotentialMode::Compensated).model(1.0).unwrap();
    assert_relative_eq!(model.rotation, -0.5, max_relative = 1e-12);
}

#[test]
fn invalid_steps_are_rejected() {
    let g = grid();
    let f = mixed_state(&g);
    let model = EffectiveModel::landau();
    let bound = model.rk4_step_bound(&g);
    assert!(matches!(step_rk4(&f, &model, 1.01 * bound), Err(Error::StepTooLarge { .. })));
    assert!(step_rk4(&f, &model, 0.99 * bound).is_ok());
    let lossy = model.with_rot_loss(Complex64::new(0.1, 0.0));
    assert_eq!(step_strang(&f, &lossy, 0.01).unwrap_err(), Error::UnsupportedLoss);
    assert!(matches!(
        ground_state(&lossy, &g, 1.0, &GroundStateOptions::default()),
        Err(Error::NonHermitianConfig)
    ));
}

#[test]
fn step_plan_covers_the_interval() {
    assert_eq!(step_plan(1.0, 0.3).unwrap(), (4, 0.25));
    assert_eq!(step_plan(1.0, 0.25).unwrap(), (4, 0.25));
    assert_eq!(step_plan(0.0, 0.1).unwrap(), (0, 0.0));
    assert!(step_plan(-1.0, 0.1).is_err());
    let (n, dt) = step_plan(PI, 0.01).unwrap();
    assert_eq!(n, 315);
    assert_relative_eq!(n as f64 * dt, PI, max_relative = 1e-15);
}

#[test]
fn evolution_samples_start_and_end() {
    let g = grid();
    let ev = evolve(&mixed_state(&g), &EffectiveModel::landau(), 1.0, Stepper::Strang, 7, &opts(0.01)).unwrap();
    assert_eq!(ev.steps, 100);
    let times = ev.trajectory.times();
    assert_eq!(times.first(), Some(&0.0));
    assert_eq!(times.last(), Some(&1.0));
    assert_eq!(times.len(), 1 + 100 / 7 + 1);
}
