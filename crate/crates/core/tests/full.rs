use approx::assert_relative_eq;
use num_complex::Complex64;
use rotapol_core::full::*;
use rotapol_core::grid::{apply_lz_unchecked, laplacian_transverse, ComplexField2D, TransverseGrid};
use rotapol_core::params::{MediumParams, RotationGeometry};
use rotapol_core::states;
use rotapol_core::Error;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn toy(d: Complex64) -> FullModel {
    FullModel {
        psi_kinetic: 0.5,
        light_kinetic: 0.8,
        nu: 0.3,
        sin: 0.6,
        cos: 0.8,
        kz_coupling: 0.25,
        delta: 0.4,
        d1: d,
        d2: d * 1.5,
    }
}

fn grid() -> TransverseGrid {
    TransverseGrid::square(64, 40.0).unwrap()
}

fn lin(terms: &[(Complex64, &ComplexField2D)]) -> ComplexField2D {
    let mut out = ComplexField2D::zeros(terms[0].1.grid());
    for (a, f) in terms {
        out.add_scaled(*a, f).unwrap();
    }
    out
}

fn state(g: &TransverseGrid) -> PolaritonTriple {
    PolaritonTriple::new(
        states::gaussian(g, (0.5, -0.3), 1.5, (0.2, 0.1)).unwrap(),
        states::hermite_gaussian(g, 1, 0, 1.4).unwrap(),
        states::vortex(g, -1, 1.6).unwrap(),
    )
    .unwrap()
}

#[test]
fn rhs_matches_term_by_term_assembly() {
    let g = grid();
    let m = toy(Complex64::new(20.0, 3.0));
    let st = state(&g);
    let (s, c) = (m.sin, m.cos);
    let (lp, l1, l2) = (
        laplacian_transverse(&st.psi).unwrap(),
        laplacian_transverse(&st.phi1).unwrap(),
        laplacian_transverse(&st.phi2).unwrap(),
    );
    let (zp, z2) = (apply_lz_unchecked(&st.psi), apply_lz_unchecked(&st.phi2));
    let psi_dot = lin(&[
        (-I * m.nu * s * s, &zp),
        (I * m.psi_kinetic, &lp),
        (I * m.kz_coupling * c, &st.phi1),
        (I * m.nu * s * c, &z2),
        (I * m.light_kinetic * s * c, &l2),
        (I * m.delta * s * s, &st.psi),
        (-I * m.delta * s * c, &st.phi2),
    ]);
    let phi1_dot = lin(&[
        (I * m.light_kinetic, &l1),
        (I * m.kz_coupling * c, &st.psi),
        (I * m.kz_coupling * s, &st.phi2),
        (-m.d1, &st.phi1),
    ]);
    let phi2_dot = lin(&[
        (-I * m.nu * c * c, &z2),
        (I * m.light_kinetic * s * s, &l2),
        (I * m.nu * s * c, &zp),
        (I * m.light_kinetic * s * c, &lp),
        (I * m.kz_coupling * s, &st.phi1),
        (-m.d2, &st.phi2),
    ]);
    let r = rhs_full(&st, &m).unwrap();
    assert!(r.psi.distance(&psi_dot).unwrap() < 1e-12);
    assert!(r.phi1.distance(&phi1_dot).unwrap() < 1e-12);
    assert!(r.phi2.distance(&phi2_dot).unwrap() < 1e-12);
}

#[test]
fn adiabatic_initial_condition() {
    let g = grid();
    let m = toy(Complex64::new(50.0, -4.0));
    let psi = states::gaussian(&g, (0.4, 0.2), 1.5, (0.3, 0.0)).unwrap();
    let (s, c) = (m.sin, m.cos);
    let k_psi = lin(&[
        (I * m.nu * s * c, &apply_lz_unchecked(&psi)),
        (I * m.light_kinetic * s * c, &laplacian_transverse(&psi).unwrap()),
    ]);
    let phi2_0 = lin(&[(1.0 / m.d2, &k_psi)]);
    let phi1_0 = lin(&[(I * m.kz_coupling * c / m.d1, &psi)]);
    let phi1 = lin(&[(I * m.kz_coupling * c / m.d1, &psi), (I * m.kz_coupling * s / m.d1, &phi2_0)]);
    let phi2 = lin(&[(1.0 / m.d2, &k_psi), (I * m.kz_coupling * s / m.d2, &phi1_0)]);
    let st = adiabatic_init(&psi, &m).unwrap();
    assert_eq!(st.psi, psi);
    assert!(st.phi1.distance(&phi1).unwrap() < 1e-14);
    assert!(st.phi2.distance(&phi2).unwrap() < 1e-14);
}

#[test]
fn bright_fields_shrink_with_stiffness() {
    let g = grid();
    let psi = states::gaussian(&g, (0.4, 0.2), 1.5, (0.3, 0.0)).unwrap();
    let a = adiabatic_init(&psi, &toy(Complex64::new(100.0, 0.0))).unwrap();
    let b = adiabatic_init(&psi, &toy(Complex64::new(1000.0, 0.0))).unwrap();
    let ratio = a.phi2.norm() / b.phi2.norm();
    assert!((ratio - 10.0).abs() < 0.01, "{ratio}");
}

#[test]
fn uniform_dark_state_is_stationary() {
    let g = grid();
    let mut m = toy(Complex64::new(30.0, 0.0));
    m.delta = 0.0;
    m.kz_coupling = 0.0;
    let r = rhs_full(&PolaritonTriple::dark(states::uniform(&g)), &m).unwrap();
    assert!(r.total_norm_sqr() < 1e-24);
}

fn permissive() -> FullEvolveOptions {
    FullEvolveOptions { leakage_tol: 1.0, ..Default::default() }
}

#[test]
fn lone_bright_field_decays_exponentially() {
    let g = grid();
    let mut m = toy(Complex64::new(4.0, 1.5));
    m.delta = 0.0;
    m.kz_coupling = 0.0;
    let z = ComplexField2D::zeros(&g);
    let u = states::uniform(&g);
    let s0 = PolaritonTriple::new(z.clone(), z.clone(), u.clone()).unwrap();
    let dt = 0.9 * m.step_bound(&g);
    let ev = evolve_full(&s0, &m, 0.5, dt, 1000, &permissive()).unwrap();
    let mut oracle = u.clone();
    oracle.scale((-m.d2 * 0.5).exp());
    assert!(ev.final_state.phi2.distance(&oracle).unwrap() < 1e-13);
    assert!(ev.final_state.psi.norm() < 1e-14);
    assert!(ev.final_state.phi1.norm() < 1e-14);
}

#[test]
fn without_kz_the_probe_field_spreads_alone() {
    let g = TransverseGrid::square(64, 48.0).unwrap();
    let mut m = toy(Complex64::new(2.0, 0.5));
    m.kz_coupling = 0.0;
    let w2 = 1.5f64 * 1.5;
    let a = m.light_kinetic;
    let t = 1.0;
    let z = ComplexField2D::zeros(&g);
    let phi1 = ComplexField2D::from_fn(&g, |x, y| Complex64::new((-(x * x + y * y) / (2.0 * w2)).exp(), 0.0));
    let s0 = PolaritonTriple::new(z.clone(), phi1, z).unwrap();
    let dt = 0.25 * m.step_bound(&g);
    let ev = evolve_full(&s0, &m, t, dt, 1000, &FullEvolveOptions::default()).unwrap();
    let sig = Complex64::new(w2, 2.0 * a * t);
    let oracle = ComplexField2D::from_fn(&g, |x, y| {
        (w2 / sig) * (-(x * x + y * y) / (2.0 * sig)).exp() * (-m.d1 * t).exp()
    });
    let e = ev.final_state.phi1.distance(&oracle).unwrap();
    assert!(e < 1e-9, "{e}");
    assert_eq!(ev.final_state.psi.norm(), 0.0);
    assert_eq!(ev.final_state.phi2.norm(), 0.0);
}

#[test]
fn dispersive_detuning_conserves_total_norm() {
    let g = grid();
    let mut m = toy(Complex64::new(0.0, 25.0));
    m.delta = 0.0;
    let s0 = state(&g);
    let n0 = s0.total_norm_sqr();
    let dt = 0.9 * m.step_bound(&g);
    let ev = evolve_full(&s0, &m, 0.5, dt, 1000, &FullEvolveOptions::default()).unwrap();
    assert_relative_eq!(ev.final_state.total_norm_sqr(), n0, max_relative = 1e-8);
}

#[test]
fn absorption_only_removes_norm() {
    let g = grid();
    let mut m = toy(Complex64::new(25.0, 0.0));
    m.delta = 0.0;
    let s0 = state(&g);
    let dt = 0.9 * m.step_bound(&g);
    let mut last = s0.total_norm_sqr();
    evolve_full_with(&s0, &m, 0.5, dt, 5, &FullEvolveOptions::default(), |_, _, s| {
        let n = s.total_norm_sqr();
        assert!(n <= last * (1.0 + 1e-12));
        last = n;
        Ok(())
    })
    .unwrap();
    assert!(last < s0.total_norm_sqr());
}

#[test]
fn steps_beyond_the_decay_limit_are_rejected() {
    let g = grid();
    let m = toy(Complex64::new(500.0, 0.0));
    let bound = m.step_bound(&g);
    assert!(bound <= MAX_DECAY_STEP / m.stiffness());
    let s0 = state(&g);
    assert!(matches!(
        evolve_full(&s0, &m, 0.1, 1.5 * bound, 1, &FullEvolveOptions::default()),
        Err(Error::StepTooLarge { .. })
    ));
}

#[test]
fn reference_medium_in_model_units() {
    let cfg = FullConfig::new(MediumParams::reference_p0(), RotationGeometry::reference_p0());
    let (m, units) = cfg.model(1.0).unwrap();
    assert_relative_eq!(m.psi_kinetic, 0.5, max_relative = 1e-9);
    assert_relative_eq!(m.nu * m.sin * m.sin, 0.5, max_relative = 1e-12);
    assert_relative_eq!(m.sin * m.sin + m.cos * m.cos, 1.0, max_relative = 1e-15);
    let med = MediumParams::reference_p0();
    let expect = Complex64::new(med.g2n(), 0.0) / Complex64::new(med.gamma, med.delta_single) * units.time;
    assert_relative_eq!(m.d1.re, expect.re, max_relative = 1e-12);
    assert_relative_eq!(m.d1.im, expect.im, max_relative = 1e-12);
    assert_eq!(m.d1, m.d2);
}

#[test]
fn stiffness_is_inverse_in_linewidth() {
    let mut med = MediumParams::reference_p0();
    med.delta_single = 0.0;
    let geom = RotationGeometry::reference_p0();
    let (a, _) = FullConfig::new(med, geom).model(1.0).unwrap();
    med.gamma *= 2.0;
    let (b, _) = FullConfig::new(med, geom).model(1.0).unwrap();
    assert_relative_eq!(a.stiffness(), 2.0 * b.stiffness(), max_relative = 1e-12);
}

#[test]
fn fidelity_and_distance_ignore_normalisation() {
    let g = grid();
    let f = states::gaussian(&g, (0.0, 0.0), 1.5, (0.0, 0.0)).unwrap();
    let mut h = f.clone();
    h.scale(Complex64::new(3.0, 0.0));
    assert!(normalized_distance(&f, &h).unwrap() < 1e-14);
    assert_relative_eq!(fidelity(&f, &h).unwrap(), 1.0, max_relative = 1e-14);
    let o = states::hermite_gaussian(&g, 1, 0, 1.5).unwrap();
    assert!(fidelity(&f, &o).unwrap() < 1e-14);
    assert_relative_eq!(normalized_distance(&f, &o).unwrap(), 2f64.sqrt(), max_relative = 1e-12);
}
