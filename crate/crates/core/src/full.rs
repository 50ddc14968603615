//! Coupled dark/bright polariton fields (Ψ, Φ1, Φ2) at a single longitudinal
//! wavenumber, integrated with exponential time differencing.
//!
//! With `s = sinθ`, `c = cosθ`, `K = i(ν s c L_z + (c_light/2k_p) s c ∇⊥²)` and
//! `∂_z → ik_z`, the equations of motion in model units are
//!
//! ```text
//! ∂ₜΨ  = −iν s² L_zΨ + i(v_g/2k_p)∇⊥²Ψ + i c_light k_z c Φ1 + KΦ2 + iδ(s²Ψ − s c Φ2)
//! ∂ₜΦ1 = i(c_light/2k_p)∇⊥²Φ1 + i c_light k_z (cΨ + sΦ2) − d₁Φ1
//! ∂ₜΦ2 = −iν c² L_zΦ2 + i(c_light/2k_p)s²∇⊥²Φ2 + KΨ + i c_light k_z s Φ1 − d₂Φ2
//! ```
//!
//! where `d₁ = g²n/Γ` and `d₂` is either `g²n/Γ` or `(g²n + Ω²)/Γ`. The decay
//! rates are integrated exactly per component; everything else is explicit.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use num_complex::Complex64;
use num_traits::Zero;
#[allow(unused_imports)]
use num_traits::Float;

use crate::effective::{self, EffectiveConfig, EffectiveModel, HamiltonianKernel, PotentialMode, Stepper, Units};
use crate::error::{Error, Result};
use crate::grid::{inner_raw, Axis, ComplexField2D, TransverseGrid, DEFAULT_LEAKAGE_TOL};
use crate::params::{derive_quantities, MediumParams, RotationGeometry, HBAR};
use crate::trajectory::Trajectory;

/// Upper bound on `dt·|d|` accepted by [`evolve_full`].
pub const MAX_DECAY_STEP: f64 = 0.1;
const CONTOUR_POINTS: usize = 64;

/// Physical configuration of a three-field run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullConfig {
    pub medium: MediumParams,
    pub geom: RotationGeometry,
    /// Longitudinal wavenumber [1/m].
    pub kz: f64,
    /// Use g²n/Γ instead of (g²n + Ω²)/Γ for the Φ2 decay.
    pub use_gn_only: bool,
}

impl FullConfig {
    pub fn new(medium: MediumParams, geom: RotationGeometry) -> Self {
        Self { medium, geom, kz: 0.0, use_gn_only: true }
    }

    /// Complex decay denominator Γ = γ + iΔ.
    pub fn gamma_complex(&self) -> Complex64 {
        Complex64::new(self.medium.gamma, self.medium.delta_single)
    }

    /// Model-unit coefficients; `extent` [m] only matters when ν = 0.
    pub fn model(&self, extent: f64) -> Result<(FullModel, Units)> {
        let derived = derive_quantities(&self.medium, &self.geom)?;
        let gamma = self.gamma_complex();
        if gamma.norm() == 0.0 {
            return Err(Error::InvalidParameter { name: "gamma", reason: "γ + iΔ must not vanish" });
        }
        let units = Units::for_derived(&derived, extent)?;
        let (t, l) = (units.time, units.length);
        let c_light = self.medium.speed_of_light;
        let k_p = self.medium.k_p();
        let g2n = self.medium.g2n();
        let d1 = Complex64::new(g2n, 0.0) / gamma * t;
        let d2 = if self.use_gn_only {
            d1
        } else {
            Complex64::new(g2n + self.medium.omega_sq(), 0.0) / gamma * t
        };
        let sin2 = derived.sin2_theta;
        let cos2 = derived.cos2_theta;
        let model = FullModel {
            psi_kinetic: derived.v_g / (2.0 * k_p) * t / (l * l),
            light_kinetic: c_light / (2.0 * k_p) * t / (l * l),
            nu: self.geom.nu * t,
            sin: sin2.sqrt(),
            cos: cos2.sqrt(),
            kz_coupling: c_light * self.kz * t,
            delta: self.medium.delta_two_photon * t,
            d1,
            d2,
        };
        debug_assert!((model.psi_kinetic - HBAR * t / (2.0 * derived.m_perp * l * l)).abs() <= 1e-9 * model.psi_kinetic);
        Ok((model, units))
    }

    /// Effective-model counterpart: potential verbatim, rotational loss with
    /// mass correction, same k_z.
    pub fn effective_config(&self) -> Result<EffectiveConfig> {
        let derived = derive_quantities(&self.medium, &self.geom)?;
        let mut cfg = EffectiveConfig::new(derived, PotentialMode::Full);
        cfg.include_rot_loss = true;
        cfg.rot_loss_mass_correction = true;
        cfg.kz = self.kz;
        cfg.delta_two_photon = self.medium.delta_two_photon;
        Ok(cfg)
    }

    pub fn effective_model(&self, extent: f64) -> Result<EffectiveModel> {
        Ok(self.effective_config()?.model(extent)?.0)
    }
}

/// Dimensionless coefficients of the three-field system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullModel {
    /// v_g/2k_p.
    pub psi_kinetic: f64,
    /// c_light/2k_p.
    pub light_kinetic: f64,
    pub nu: f64,
    pub sin: f64,
    pub cos: f64,
    /// c_light·k_z.
    pub kz_coupling: f64,
    pub delta: f64,
    pub d1: Complex64,
    pub d2: Complex64,
}

impl FullModel {
    /// Stiffness |d₂|.
    pub fn stiffness(&self) -> f64 {
        self.d2.norm()
    }

    /// Bound on the spectral radius of the explicitly treated part.
    pub fn explicit_bound(&self, grid: &TransverseGrid) -> f64 {
        let k2 = grid.kx_max().powi(2) + grid.ky_max().powi(2);
        let lb = EffectiveModel::lz_bound(grid);
        let (s, c) = (self.sin, self.cos);
        let kin = self.psi_kinetic.max(self.light_kinetic * (s * s + 2.0 * s * c)).max(self.light_kinetic);
        kin * k2
            + self.nu.abs() * (s * s + c * c + 2.0 * s * c) * lb
            + self.kz_coupling.abs() * 2.0 * (s + c)
            + self.delta.abs() * (s * s + s * c)
    }

    /// Largest accepted step: explicit RK4 stability and `dt·|d| ≤ 0.1`.
    pub fn step_bound(&self, grid: &TransverseGrid) -> f64 {
        let explicit = effective::RK4_STABILITY / self.explicit_bound(grid);
        let decay = MAX_DECAY_STEP / self.d1.norm().max(self.d2.norm());
        explicit.min(decay)
    }

    pub fn default_dt(&self, grid: &TransverseGrid) -> f64 {
        0.9 * self.step_bound(grid)
    }

    /// Effective Hamiltonian matching the Ψ equation without bright fields
    /// (kinetic, drag, δ as printed; no loss).
    fn psi_hamiltonian(&self) -> EffectiveModel {
        let omega = self.nu * self.sin * self.sin;
        let mut m = EffectiveModel::rotating(omega, PotentialMode::None);
        m.kinetic = self.psi_kinetic;
        m.offset = -self.delta * self.sin * self.sin;
        m
    }
}

/// State (Ψ, Φ1, Φ2) on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PolaritonTriple {
    pub psi: ComplexField2D,
    pub phi1: ComplexField2D,
    pub phi2: ComplexField2D,
}

impl PolaritonTriple {
    pub fn new(psi: ComplexField2D, phi1: ComplexField2D, phi2: ComplexField2D) -> Result<Self> {
        psi.same_grid(&phi1)?;
        psi.same_grid(&phi2)?;
        Ok(Self { psi, phi1, phi2 })
    }

    /// Dark state only: Φ1 = Φ2 = 0.
    pub fn dark(psi: ComplexField2D) -> Self {
        let z = ComplexField2D::zeros(psi.grid());
        Self { phi1: z.clone(), phi2: z, psi }
    }

    pub fn grid(&self) -> &TransverseGrid {
        self.psi.grid()
    }

    pub fn total_norm_sqr(&self) -> f64 {
        self.psi.norm_sqr() + self.phi1.norm_sqr() + self.phi2.norm_sqr()
    }

    pub fn ensure_finite(&self) -> Result<()> {
        self.psi.ensure_finite()?;
        self.phi1.ensure_finite()?;
        self.phi2.ensure_finite()
    }

    pub fn check_leakage(&self, tol: f64) -> Result<()> {
        self.psi.check_leakage(tol)?;
        self.phi1.check_leakage(tol)?;
        self.phi2.check_leakage(tol)
    }
}

/// L_z f and ∇⊥² f of one raw field.
struct Operators {
    d1: Vec<Complex64>,
    d2: Vec<Complex64>,
    e1: Vec<Complex64>,
    e2: Vec<Complex64>,
}

impl Operators {
    fn new(n: usize) -> Self {
        Self {
            d1: vec![Complex64::zero(); n],
            d2: vec![Complex64::zero(); n],
            e1: vec![Complex64::zero(); n],
            e2: vec![Complex64::zero(); n],
        }
    }

    fn compute(&mut self, grid: &TransverseGrid, f: &[Complex64], lz: &mut [Complex64], lap: &mut [Complex64]) {
        grid.axis_derivatives(f, Axis::Y, &mut self.d1, &mut self.d2);
        grid.axis_derivatives(f, Axis::X, &mut self.e1, &mut self.e2);
        let ny = grid.ny();
        for (ix, &x) in grid.x().iter().enumerate() {
            for (iy, &y) in grid.y().iter().enumerate() {
                let i = ix * ny + iy;
                let t = self.d1[i] * x - self.e1[i] * y;
                lz[i] = Complex64::new(t.im, -t.re);
                lap[i] = self.d2[i] + self.e2[i];
            }
        }
    }
}

/// Raw-vector right-hand side with reusable buffers; `with_decay` selects
/// whether the −d·Φ terms are included.
struct FullRhs {
    grid: TransverseGrid,
    model: FullModel,
    ops: Operators,
    lz: [Vec<Complex64>; 3],
    lap: [Vec<Complex64>; 3],
}

impl FullRhs {
    fn new(grid: &TransverseGrid, model: &FullModel) -> Self {
        let n = grid.len();
        let z = || vec![Complex64::zero(); n];
        Self {
            grid: grid.clone(),
            model: *model,
            ops: Operators::new(n),
            lz: [z(), z(), z()],
            lap: [z(), z(), z()],
        }
    }

    fn eval(&mut self, u: [&[Complex64]; 3], out: [&mut [Complex64]; 3], with_decay: bool) {
        let m = self.model;
        let need_lz = [true, false, true];
        for c in 0..3 {
            let (lz, lap) = (&mut self.lz[c], &mut self.lap[c]);
            self.ops.compute(&self.grid, u[c], lz, lap);
            if !need_lz[c] {
                lz.iter_mut().for_each(|v| *v = Complex64::zero());
            }
        }
        let i = Complex64::i();
        let (s, c) = (m.sin, m.cos);
        let [psi, phi1, phi2] = u;
        let [o0, o1, o2] = out;
        let k_lz = i * (m.nu * s * c);
        let k_lap = i * (m.light_kinetic * s * c);
        let kz = i * m.kz_coupling;
        let dl = i * m.delta;
        let (d1, d2) = if with_decay { (m.d1, m.d2) } else { (Complex64::zero(), Complex64::zero()) };
        for j in 0..psi.len() {
            let k_psi = self.lz[0][j] * k_lz + self.lap[0][j] * k_lap;
            let k_phi2 = self.lz[2][j] * k_lz + self.lap[2][j] * k_lap;
            o0[j] = -i * (m.nu * s * s) * self.lz[0][j]
                + i * m.psi_kinetic * self.lap[0][j]
                + kz * c * phi1[j]
                + k_phi2
                + dl * (psi[j] * (s * s) - phi2[j] * (s * c));
            o1[j] = i * m.light_kinetic * self.lap[1][j] + kz * (psi[j] * c + phi2[j] * s) - d1 * phi1[j];
            o2[j] = -i * (m.nu * c * c) * self.lz[2][j]
                + i * (m.light_kinetic * s * s) * self.lap[2][j]
                + k_psi
                + kz * s * phi1[j]
                - d2 * phi2[j];
        }
    }
}

/// Time derivatives of (Ψ, Φ1, Φ2).
pub fn rhs_full(state: &PolaritonTriple, model: &FullModel) -> Result<PolaritonTriple> {
    state.ensure_finite()?;
    let g = state.grid().clone();
    let n = g.len();
    let mut rhs = FullRhs::new(&g, model);
    let (mut a, mut b, mut c) = (vec![Complex64::zero(); n], vec![Complex64::zero(); n], vec![Complex64::zero(); n]);
    rhs.eval(
        [state.psi.values(), state.phi1.values(), state.phi2.values()],
        [&mut a, &mut b, &mut c],
        true,
    );
    PolaritonTriple::new(
        ComplexField2D::new(g.clone(), a)?,
        ComplexField2D::new(g.clone(), b)?,
        ComplexField2D::new(g, c)?,
    )
}

/// Slaves the bright components to Ψ at leading order in 1/d.
///
/// `Φ2 = (KΨ + i c_light k_z s Φ1⁰)/d₂` and `Φ1 = i c_light k_z (cΨ + sΦ2⁰)/d₁`,
/// where the superscript 0 marks the values without cross coupling.
pub fn adiabatic_init(psi: &ComplexField2D, model: &FullModel) -> Result<PolaritonTriple> {
    psi.ensure_finite()?;
    let g = psi.grid().clone();
    let n = g.len();
    let mut ops = Operators::new(n);
    let (mut lz, mut lap) = (vec![Complex64::zero(); n], vec![Complex64::zero(); n]);
    ops.compute(&g, psi.values(), &mut lz, &mut lap);
    let i = Complex64::i();
    let (s, c) = (model.sin, model.cos);
    let kz = i * model.kz_coupling;
    let p = psi.values();
    let mut phi1 = vec![Complex64::zero(); n];
    let mut phi2 = vec![Complex64::zero(); n];
    for j in 0..n {
        let k_psi = i * (model.nu * s * c) * lz[j] + i * (model.light_kinetic * s * c) * lap[j];
        let phi2_0 = k_psi / model.d2;
        let phi1_0 = kz * c * p[j] / model.d1;
        phi1[j] = kz * (p[j] * c + phi2_0 * s) / model.d1;
        phi2[j] = (k_psi + kz * s * phi1_0) / model.d2;
    }
    PolaritonTriple::new(psi.clone(), ComplexField2D::new(g.clone(), phi1)?, ComplexField2D::new(g, phi2)?)
}

/// ETDRK4 coefficients for one scalar linear rate `λ` and step `h`.
#[derive(Debug, Clone, Copy)]
struct EtdCoefficients {
    e: Complex64,
    e2: Complex64,
    q: Complex64,
    f1: Complex64,
    f2: Complex64,
    f3: Complex64,
}

impl EtdCoefficients {
    /// Contour-averaged φ-functions (radius-1 circle around hλ).
    fn new(lambda: Complex64, h: f64) -> Self {
        let z = lambda * h;
        let m = CONTOUR_POINTS as f64;
        let (mut q, mut f1, mut f2, mut f3) = (Complex64::zero(), Complex64::zero(), Complex64::zero(), Complex64::zero());
        for j in 0..CONTOUR_POINTS {
            let w = z + Complex64::from_polar(1.0, TAU * (j as f64 + 0.5) / m);
            let ew = w.exp();
            let w3 = w * w * w;
            q += ((w * 0.5).exp() - 1.0) / w;
            f1 += (-4.0 - w + ew * (4.0 - 3.0 * w + w * w)) / w3;
            f2 += (2.0 + w + ew * (w - 2.0)) / w3;
            f3 += (-4.0 - 3.0 * w - w * w + ew * (4.0 - w)) / w3;
        }
        let s = h / m;
        Self { e: z.exp(), e2: (z * 0.5).exp(), q: q * s, f1: f1 * s, f2: f2 * s, f3: f3 * s }
    }
}

struct EtdStepper {
    rhs: FullRhs,
    coef: [EtdCoefficients; 3],
    nu: [Vec<Complex64>; 3],
    na: [Vec<Complex64>; 3],
    nb: [Vec<Complex64>; 3],
    nc: [Vec<Complex64>; 3],
    a: [Vec<Complex64>; 3],
    b: [Vec<Complex64>; 3],
    c: [Vec<Complex64>; 3],
}

fn split3(v: &mut [Vec<Complex64>; 3]) -> [&mut [Complex64]; 3] {
    let [a, b, c] = v;
    [a.as_mut_slice(), b.as_mut_slice(), c.as_mut_slice()]
}

fn view3(v: &[Vec<Complex64>; 3]) -> [&[Complex64]; 3] {
    [v[0].as_slice(), v[1].as_slice(), v[2].as_slice()]
}

impl EtdStepper {
    fn new(grid: &TransverseGrid, model: &FullModel, h: f64) -> Self {
        let n = grid.len();
        let z = || [vec![Complex64::zero(); n], vec![Complex64::zero(); n], vec![Complex64::zero(); n]];
        Self {
            rhs: FullRhs::new(grid, model),
            coef: [
                EtdCoefficients::new(Complex64::zero(), h),
                EtdCoefficients::new(-model.d1, h),
                EtdCoefficients::new(-model.d2, h),
            ],
            nu: z(),
            na: z(),
            nb: z(),
            nc: z(),
            a: z(),
            b: z(),
            c: z(),
        }
    }

    fn step(&mut self, u: &mut [Vec<Complex64>; 3]) {
        self.rhs.eval(view3(u), split3(&mut self.nu), false);
        for k in 0..3 {
            let cf = self.coef[k];
            for j in 0..u[k].len() {
                self.a[k][j] = cf.e2 * u[k][j] + cf.q * self.nu[k][j];
            }
        }
        self.rhs.eval(view3(&self.a), split3(&mut self.na), false);
        for k in 0..3 {
            let cf = self.coef[k];
            for j in 0..u[k].len() {
                self.b[k][j] = cf.e2 * u[k][j] + cf.q * self.na[k][j];
            }
        }
        self.rhs.eval(view3(&self.b), split3(&mut self.nb), false);
        for k in 0..3 {
            let cf = self.coef[k];
            for j in 0..u[k].len() {
                self.c[k][j] = cf.e2 * self.a[k][j] + cf.q * (self.nb[k][j] * 2.0 - self.nu[k][j]);
            }
        }
        self.rhs.eval(view3(&self.c), split3(&mut self.nc), false);
        for k in 0..3 {
            let cf = self.coef[k];
            for j in 0..u[k].len() {
                u[k][j] = cf.e * u[k][j]
                    + cf.f1 * self.nu[k][j]
                    + cf.f2 * (self.na[k][j] + self.nb[k][j]) * 2.0
                    + cf.f3 * self.nc[k][j];
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullEvolveOptions {
    pub leakage_every: usize,
    pub leakage_tol: f64,
}

impl Default for FullEvolveOptions {
    fn default() -> Self {
        Self { leakage_every: effective::DEFAULT_LEAKAGE_EVERY, leakage_tol: DEFAULT_LEAKAGE_TOL }
    }
}

#[derive(Debug, Clone)]
pub struct FullEvolution {
    /// Observables of Ψ; energies use the Ψ-only Hamiltonian.
    pub trajectory: Trajectory,
    pub final_state: PolaritonTriple,
    pub dt: f64,
    pub steps: usize,
}

/// ETDRK4 integration of the three-field system.
pub fn evolve_full(
    s0: &PolaritonTriple,
    model: &FullModel,
    t_final: f64,
    dt: f64,
    sample_every: usize,
    options: &FullEvolveOptions,
) -> Result<FullEvolution> {
    evolve_full_with(s0, model, t_final, dt, sample_every, options, |_, _, _| Ok(()))
}

/// [`evolve_full`] with a callback at every sample.
pub fn evolve_full_with<F>(
    s0: &PolaritonTriple,
    model: &FullModel,
    t_final: f64,
    dt: f64,
    sample_every: usize,
    options: &FullEvolveOptions,
    mut observer: F,
) -> Result<FullEvolution>
where
    F: FnMut(usize, f64, &PolaritonTriple) -> Result<()>,
{
    if sample_every == 0 {
        return Err(Error::InvalidParameter { name: "sample_every", reason: "must be at least 1" });
    }
    let grid = s0.grid().clone();
    s0.ensure_finite()?;
    s0.check_leakage(options.leakage_tol)?;
    let (steps, h) = effective::step_plan(t_final, dt)?;
    let bound = model.step_bound(&grid);
    if h > bound {
        return Err(Error::StepTooLarge { dt: h, bound });
    }
    let mut stepper = EtdStepper::new(&grid, model, h.max(f64::MIN_POSITIVE));
    let mut energy_kernel = HamiltonianKernel::new(&grid, &model.psi_hamiltonian());
    let mut u = [s0.psi.values().to_vec(), s0.phi1.values().to_vec(), s0.phi2.values().to_vec()];
    let mut state = s0.clone();
    let mut trajectory = Trajectory::new(grid.dx().min(grid.dy()));
    trajectory.samples.push(effective::sample(&state.psi, &mut energy_kernel, 0.0));
    observer(0, 0.0, &state)?;
    let leak_every = options.leakage_every.max(1);
    for step in 1..=steps {
        stepper.step(&mut u);
        let is_sample = step % sample_every == 0 || step == steps;
        if step % leak_every == 0 || is_sample {
            state.psi.values_mut().copy_from_slice(&u[0]);
            state.phi1.values_mut().copy_from_slice(&u[1]);
            state.phi2.values_mut().copy_from_slice(&u[2]);
            state.ensure_finite()?;
            state.check_leakage(options.leakage_tol)?;
        }
        if is_sample {
            let t = if step == steps { t_final } else { step as f64 * h };
            trajectory.samples.push(effective::sample(&state.psi, &mut energy_kernel, t));
            observer(step, t, &state)?;
        }
    }
    Ok(FullEvolution { trajectory, final_state: state, dt: h, steps })
}

/// Result of running the effective and the three-field model side by side.
#[derive(Debug, Clone)]
pub struct ModelComparison {
    /// max over samples of ‖ψ_eff/‖ψ_eff‖ − ψ_full/‖ψ_full‖‖.
    pub deviation: f64,
    /// rate_Ψ/|d₂|, the small parameter of the elimination.
    pub epsilon: f64,
    /// (time, distance) at every sample.
    pub samples: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareOptions {
    /// Common step; `None` uses the three-field default.
    pub dt: Option<f64>,
    pub sample_every: usize,
    pub leakage_tol: f64,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self { dt: None, sample_every: 20, leakage_tol: DEFAULT_LEAKAGE_TOL }
    }
}

/// L² distance between the normalized fields.
pub fn normalized_distance(a: &ComplexField2D, b: &ComplexField2D) -> Result<f64> {
    a.same_grid(b)?;
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let s: f64 = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x / na - y / nb).norm_sqr())
        .sum();
    Ok((s * a.grid().cell_area()).sqrt())
}

/// `max(|Ω|·m_est, k·k_est²)/|d₂|` with `m_est = max(1, √⟨L_z²⟩)` and
/// `k_est² = ⟨−∇⊥²⟩` of the initial state.
pub fn elimination_epsilon(psi: &ComplexField2D, model: &FullModel) -> Result<f64> {
    let lz2 = crate::grid::expectation(psi, crate::grid::Observable::Lz2)?.re;
    let k2 = 2.0 * crate::grid::expectation(psi, crate::grid::Observable::KineticPerp)?.re;
    let omega = (model.nu * model.sin * model.sin).abs();
    let rate = (omega * lz2.sqrt().max(1.0)).max(model.psi_kinetic * k2);
    Ok(rate / model.stiffness())
}

/// Runs both models from the same Ψ (three-field side via [`adiabatic_init`])
/// and reports their largest normalized distance.
pub fn compare_models(
    cfg: &FullConfig,
    psi0: &ComplexField2D,
    t_final: f64,
    options: &CompareOptions,
) -> Result<ModelComparison> {
    let extent = psi0.grid().extent_x().min(psi0.grid().extent_y());
    let (full, _) = cfg.model(extent)?;
    let eff = cfg.effective_model(extent)?;
    let grid = psi0.grid();
    let dt = options.dt.unwrap_or_else(|| full.default_dt(grid).min(0.9 * eff.rk4_step_bound(grid)));
    let s0 = adiabatic_init(psi0, &full)?;
    let full_opts = FullEvolveOptions { leakage_tol: options.leakage_tol, ..Default::default() };
    let mut full_fields = Vec::new();
    evolve_full_with(&s0, &full, t_final, dt, options.sample_every, &full_opts, |_, t, s| {
        full_fields.push((t, s.psi.clone()));
        Ok(())
    })?;
    let eff_opts = effective::EvolveOptions { dt: Some(dt), leakage_tol: options.leakage_tol, ..Default::default() };
    let mut samples = Vec::with_capacity(full_fields.len());
    let mut idx = 0;
    let mut failure = None;
    effective::evolve_with(psi0, &eff, t_final, Stepper::Rk4, options.sample_every, &eff_opts, |_, t, f| {
        if let Some((tf, pf)) = full_fields.get(idx) {
            match normalized_distance(f, pf) {
                Ok(d) => samples.push((t.max(*tf), d)),
                Err(e) => failure = Some(e),
            }
        }
        idx += 1;
        Ok(())
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    let deviation = samples.iter().map(|s| s.1).fold(0.0, f64::max);
    Ok(ModelComparison { deviation, epsilon: elimination_epsilon(psi0, &full)?, samples })
}

/// Overlap ⟨a|b⟩ normalized by both norms.
pub fn fidelity(a: &ComplexField2D, b: &ComplexField2D) -> Result<f64> {
    a.same_grid(b)?;
    let (na, nb) = (a.values().iter().map(|v| v.norm_sqr()).sum::<f64>(), b.values().iter().map(|v| v.norm_sqr()).sum::<f64>());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(inner_raw(a.values(), b.values()).norm() / (na * nb).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn etd_coefficients_reduce_to_rk4_weights_at_zero_rate() {
        let h = 0.01;
        let c = EtdCoefficients::new(Complex64::zero(), h);
        assert!((c.q - h / 2.0).norm() < 1e-15);
        assert!((c.f1 - h / 6.0).norm() < 1e-15);
        assert!((c.f2 - h / 6.0).norm() < 1e-15);
        assert!((c.f3 - h / 6.0).norm() < 1e-15);
    }

    #[test]
    fn etd_coefficients_match_closed_form() {
        let lambda = Complex64::new(-30.0, 7.0);
        let h = 0.2;
        let c = EtdCoefficients::new(lambda, h);
        let z = lambda * h;
        let z3 = z * z * z;
        let f1 = h * (-4.0 - z + z.exp() * (4.0 - 3.0 * z + z * z)) / z3;
        let q = ((z * 0.5).exp() - 1.0) / lambda;
        assert!((c.f1 - f1).norm() < 1e-13 * f1.norm());
        assert!((c.q - q).norm() < 1e-13 * q.norm());
    }
}
