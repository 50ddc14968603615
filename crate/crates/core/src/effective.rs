//! Effective single-field dynamics of the dark-state polariton.
//!
//! In model units the transverse Hamiltonian is
//!
//! ```text
//! H = -k∇⊥² + Ω L_z + V(ρ) + u₀ − iΓ L_z²
//! ```
//!
//! with `k = ħ/2m⊥`, `Ω = ν sin²θ`, `L_z` in units of ħ and
//! `V = ½m⊥Ω²ρ²` from the diamagnetic `A²/2m⊥` term. The scalar potential
//! `U = −½m⊥Ω²ρ² + ħδ sin²θ` is added according to [`PotentialMode`]:
//! `Full` adds it verbatim (the ρ² pieces cancel), `Compensated` drops it,
//! and `None` drops both the diamagnetic term and `U`.
//!
//! Model units are ħ = m⊥ = ω_c = 1 when the medium rotates (length L_mag,
//! time 1/ω_c). Without rotation the length unit is a fixed fraction of the box
//! and the time unit is m⊥ℓ²/ħ. A single longitudinal Fourier mode `k_z`
//! contributes the scalar factor `exp(-(D∥k_z² + iħk_z²/2m∥)t)`.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::Zero;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::grid::{self, inner_raw, Axis, ComplexField2D, TransverseGrid, DEFAULT_LEAKAGE_TOL};
use crate::params::{DerivedQuantities, HBAR};
use crate::states;
use crate::trajectory::{Sample, Trajectory};

/// Angular-momentum scale used for the default time step.
pub const M_EST: f64 = 16.0;
/// Time step as a fraction of ħ/E_max.
pub const DEFAULT_DT_FACTOR: f64 = 0.2;
/// Stability limit of classical RK4 on the imaginary axis, slightly reduced to
/// also cover the negative real axis.
pub const RK4_STABILITY: f64 = 2.78;
pub const DEFAULT_LEAKAGE_EVERY: usize = 50;
/// Box extent divided by this gives the length unit when ν = 0.
pub const FREE_LENGTH_DIVISOR: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum PotentialMode {
    Full,
    Compensated,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Stepper {
    Rk4,
    Strang,
}

/// SI size of one model length and one model time unit.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Units {
    pub length: f64,
    pub time: f64,
}

impl Units {
    pub const MODEL: Units = Units { length: 1.0, time: 1.0 };

    /// Units for a rotating medium (ν ≠ 0) or a free one with box size `extent` [m].
    pub fn for_derived(derived: &DerivedQuantities, extent: f64) -> Result<Self> {
        if derived.omega_c > 0.0 {
            let length = derived.l_mag_checked()?;
            Ok(Self { length, time: 1.0 / derived.omega_c })
        } else {
            if !(extent > 0.0 && extent.is_finite()) {
                return Err(Error::InvalidParameter { name: "extent", reason: "must be positive" });
            }
            let length = extent / FREE_LENGTH_DIVISOR;
            Ok(Self { length, time: derived.m_perp * length * length / HBAR })
        }
    }
}

/// Physical configuration of an effective-model run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveConfig {
    pub derived: DerivedQuantities,
    pub potential_mode: PotentialMode,
    pub include_rot_loss: bool,
    /// Keep the imaginary (mass-correcting) part of the rotational loss rate.
    pub rot_loss_mass_correction: bool,
    /// Longitudinal wavenumber [1/m].
    pub kz: f64,
    /// Two-photon detuning δ [rad/s].
    pub delta_two_photon: f64,
    /// Grid extents and times are given in model units instead of SI.
    pub nondimensional: bool,
}

impl EffectiveConfig {
    pub fn new(derived: DerivedQuantities, potential_mode: PotentialMode) -> Self {
        Self {
            derived,
            potential_mode,
            include_rot_loss: false,
            rot_loss_mass_correction: true,
            kz: 0.0,
            delta_two_photon: 0.0,
            nondimensional: true,
        }
    }

    pub fn units(&self, extent: f64) -> Result<Units> {
        Units::for_derived(&self.derived, extent)
    }

    /// Converts to model-unit coefficients; `extent` [m] only matters when ν = 0.
    pub fn model(&self, extent: f64) -> Result<(EffectiveModel, Units)> {
        let d = &self.derived;
        let units = self.units(extent)?;
        let t = units.time;
        let kinetic = HBAR * t / (2.0 * d.m_perp * units.length * units.length);
        let rotation = d.drag_rate() * t;
        let harmonic = 0.5 * rotation * rotation * d.m_perp * units.length * units.length / (HBAR * t);
        let offset = match self.potential_mode {
            PotentialMode::Full => self.delta_two_photon * d.sin2_theta * t,
            _ => 0.0,
        };
        let rot_loss = if self.include_rot_loss {
            let g = d.gamma_rot * t;
            if self.rot_loss_mass_correction {
                g
            } else {
                Complex64::new(g.re, 0.0)
            }
        } else {
            Complex64::zero()
        };
        let kz2 = self.kz * self.kz;
        let kz_phase = d.m_par.map_or(0.0, |m| HBAR * kz2 / (2.0 * m));
        let kz_decay = Complex64::new(d.d_diff * kz2, kz_phase) * t;
        Ok((
            EffectiveModel {
                kinetic,
                rotation,
                harmonic,
                mode: self.potential_mode,
                offset,
                rot_loss,
                kz_decay,
            },
            units,
        ))
    }
}

/// Dimensionless coefficients of the effective Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EffectiveModel {
    /// `k` in `-k∇⊥²` (ħ/2m⊥).
    pub kinetic: f64,
    /// Signed drag rate Ω = ν sin²θ multiplying L_z.
    pub rotation: f64,
    /// ½m⊥Ω², coefficient of ρ² in A²/2m⊥.
    pub harmonic: f64,
    pub mode: PotentialMode,
    /// Constant ħδ sin²θ (Full mode only).
    pub offset: f64,
    /// Γ⊥_rot in model units; the term is −iΓL_z².
    pub rot_loss: Complex64,
    /// Amplitude rate of the longitudinal mode factor `exp(-kz_decay·t)`.
    pub kz_decay: Complex64,
}

impl EffectiveModel {
    /// Symmetric-gauge Landau problem with ħ = m⊥ = ω_c = 1, compensated potential.
    pub fn landau() -> Self {
        Self::rotating(0.5, PotentialMode::Compensated)
    }

    /// Rotating model with drag rate `omega` (ħ = m⊥ = 1).
    pub fn rotating(omega: f64, mode: PotentialMode) -> Self {
        Self {
            kinetic: 0.5,
            rotation: omega,
            harmonic: 0.5 * omega * omega,
            mode,
            offset: 0.0,
            rot_loss: Complex64::zero(),
            kz_decay: Complex64::zero(),
        }
    }

    /// Free particle with ħ = m⊥ = 1.
    pub fn free() -> Self {
        Self::rotating(0.0, PotentialMode::None)
    }

    pub fn with_rot_loss(mut self, gamma: Complex64) -> Self {
        self.rot_loss = gamma;
        self
    }

    pub fn with_kz_decay(mut self, rate: Complex64) -> Self {
        self.kz_decay = rate;
        self
    }

    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    /// Cyclotron frequency 2Ω (signed).
    pub fn omega_c(&self) -> f64 {
        2.0 * self.rotation
    }

    pub fn mass(&self) -> f64 {
        0.5 / self.kinetic
    }

    /// Coefficient of ρ² in the real-space potential.
    pub fn quadratic_coefficient(&self) -> f64 {
        match self.mode {
            PotentialMode::Full => self.harmonic + (-self.harmonic),
            PotentialMode::Compensated => self.harmonic,
            PotentialMode::None => 0.0,
        }
    }

    pub fn has_loss(&self) -> bool {
        self.rot_loss != Complex64::zero()
    }

    /// True when the generator is Hermitian (no dissipative L_z² part).
    pub fn is_hermitian(&self) -> bool {
        self.rot_loss.re == 0.0
    }

    /// Drops the dissipative part of the rotational loss, keeping the mass correction.
    pub fn hermitian_part(&self) -> Self {
        let mut m = *self;
        m.rot_loss = Complex64::new(0.0, self.rot_loss.im);
        m
    }

    /// Without the ρ² confinement nothing keeps a state inside the box.
    pub fn unconfined(&self) -> bool {
        self.quadratic_coefficient() <= 0.0
    }

    fn max_abs_potential(&self, grid: &TransverseGrid) -> f64 {
        let (xm, ym) = grid.coordinate_max();
        self.quadratic_coefficient().abs() * (xm * xm + ym * ym) + self.offset.abs()
    }

    /// Upper bound of |L_z| on the grid, max|x|·k_y + max|y|·k_x.
    pub fn lz_bound(grid: &TransverseGrid) -> f64 {
        let (xm, ym) = grid.coordinate_max();
        xm * grid.ky_max() + ym * grid.kx_max()
    }

    /// Bound on the spectral radius of the discretized generator.
    pub fn spectral_radius_bound(&self, grid: &TransverseGrid) -> f64 {
        let lb = Self::lz_bound(grid);
        self.kinetic * (grid.kx_max().powi(2) + grid.ky_max().powi(2))
            + self.rotation.abs() * lb
            + self.max_abs_potential(grid)
            + self.rot_loss.norm() * lb * lb
    }

    /// Energy scale E_max with L_z estimated as [`M_EST`].
    pub fn energy_scale(&self, grid: &TransverseGrid) -> f64 {
        self.kinetic * (grid.kx_max().powi(2) + grid.ky_max().powi(2))
            + self.max_abs_potential(grid)
            + self.rotation.abs() * M_EST
            + self.rot_loss.norm() * M_EST * M_EST
    }

    /// Largest RK4 step accepted by [`step_rk4`].
    pub fn rk4_step_bound(&self, grid: &TransverseGrid) -> f64 {
        RK4_STABILITY / self.spectral_radius_bound(grid)
    }

    /// `0.2/E_max`, capped below the RK4 bound.
    pub fn default_dt(&self, grid: &TransverseGrid) -> f64 {
        (DEFAULT_DT_FACTOR / self.energy_scale(grid)).min(0.9 * self.rk4_step_bound(grid))
    }
}

/// Reusable buffers applying H to raw grid vectors.
#[derive(Debug, Clone)]
pub struct HamiltonianKernel {
    grid: TransverseGrid,
    model: EffectiveModel,
    potential: Vec<f64>,
    d1: Vec<Complex64>,
    d2: Vec<Complex64>,
    e1: Vec<Complex64>,
    e2: Vec<Complex64>,
    lz: Vec<Complex64>,
}

impl HamiltonianKernel {
    pub fn new(grid: &TransverseGrid, model: &EffectiveModel) -> Self {
        let q = model.quadratic_coefficient();
        let mut potential = Vec::with_capacity(grid.len());
        for &x in grid.x() {
            for &y in grid.y() {
                potential.push(q * (x * x + y * y) + model.offset);
            }
        }
        let n = grid.len();
        Self {
            grid: grid.clone(),
            model: *model,
            potential,
            d1: vec![Complex64::zero(); n],
            d2: vec![Complex64::zero(); n],
            e1: vec![Complex64::zero(); n],
            e2: vec![Complex64::zero(); n],
            lz: vec![Complex64::zero(); n],
        }
    }

    pub fn grid(&self) -> &TransverseGrid {
        &self.grid
    }

    pub fn model(&self) -> &EffectiveModel {
        &self.model
    }

    /// `out = H·src` for raw row-major vectors.
    pub fn apply(&mut self, src: &[Complex64], out: &mut [Complex64]) {
        let g = &self.grid;
        let ny = g.ny();
        g.axis_derivatives(src, Axis::Y, &mut self.d1, &mut self.d2);
        g.axis_derivatives(src, Axis::X, &mut self.e1, &mut self.e2);
        let m = &self.model;
        for (ix, &x) in g.x().iter().enumerate() {
            for (iy, &y) in g.y().iter().enumerate() {
                let i = ix * ny + iy;
                let t = self.d1[i] * x - self.e1[i] * y;
                let l = Complex64::new(t.im, -t.re);
                self.lz[i] = l;
                out[i] = -(self.d2[i] + self.e2[i]) * m.kinetic + l * m.rotation + src[i] * self.potential[i];
            }
        }
        if m.has_loss() {
            let c = Complex64::new(0.0, -1.0) * m.rot_loss;
            self.d1.copy_from_slice(&self.lz);
            self.e1.copy_from_slice(&self.lz);
            let (ky, kx) = (g.ky_odd(), g.kx_odd());
            g.spectral_axis(&mut self.d1, Axis::Y, |k, _| Complex64::new(0.0, ky[k]));
            g.spectral_axis(&mut self.e1, Axis::X, |k, _| Complex64::new(0.0, kx[k]));
            for (ix, &x) in g.x().iter().enumerate() {
                for (iy, &y) in g.y().iter().enumerate() {
                    let i = ix * ny + iy;
                    let t = self.d1[i] * x - self.e1[i] * y;
                    out[i] += Complex64::new(t.im, -t.re) * c;
                }
            }
        }
    }

    /// Re⟨f|H|f⟩/⟨f|f⟩.
    pub fn energy(&mut self, f: &[Complex64]) -> f64 {
        let mut hf = vec![Complex64::zero(); f.len()];
        self.apply(f, &mut hf);
        let n2: f64 = f.iter().map(|v| v.norm_sqr()).sum();
        inner_raw(f, &hf).re / n2
    }
}

/// (H/ħ)f in model units.
pub fn apply_hamiltonian(f: &ComplexField2D, model: &EffectiveModel) -> Result<ComplexField2D> {
    f.ensure_finite()?;
    f.check_leakage(DEFAULT_LEAKAGE_TOL)?;
    let mut kernel = HamiltonianKernel::new(f.grid(), model);
    let mut out = vec![Complex64::zero(); f.grid().len()];
    kernel.apply(f.values(), &mut out);
    let out = ComplexField2D::new(f.grid().clone(), out)?;
    Ok(out)
}

struct Rk4Stages {
    k: Vec<Complex64>,
    acc: Vec<Complex64>,
    tmp: Vec<Complex64>,
}

impl Rk4Stages {
    fn new(n: usize) -> Self {
        Self {
            k: vec![Complex64::zero(); n],
            acc: vec![Complex64::zero(); n],
            tmp: vec![Complex64::zero(); n],
        }
    }

    /// One classical RK4 step of ∂ₜu = −iHu.
    fn step(&mut self, kernel: &mut HamiltonianKernel, u: &mut [Complex64], dt: f64) {
        let minus_i = Complex64::new(0.0, -1.0);
        let weights = [1.0, 2.0, 2.0, 1.0];
        let offsets = [0.5, 0.5, 1.0];
        self.tmp.copy_from_slice(u);
        self.acc.copy_from_slice(u);
        for stage in 0..4 {
            kernel.apply(&self.tmp, &mut self.k);
            let w = minus_i * (dt * weights[stage] / 6.0);
            for (a, k) in self.acc.iter_mut().zip(&self.k) {
                *a += k * w;
            }
            if stage < 3 {
                let h = minus_i * (dt * offsets[stage]);
                for ((t, x), k) in self.tmp.iter_mut().zip(u.iter()).zip(&self.k) {
                    *t = x + k * h;
                }
            }
        }
        u.copy_from_slice(&self.acc);
    }
}

fn check_dt(dt: f64) -> Result<()> {
    if dt >= 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name: "dt", reason: "must be finite and non-negative" })
    }
}

fn check_rk4_dt(model: &EffectiveModel, grid: &TransverseGrid, dt: f64) -> Result<()> {
    check_dt(dt)?;
    let bound = model.rk4_step_bound(grid);
    if dt > bound {
        return Err(Error::StepTooLarge { dt, bound });
    }
    Ok(())
}

/// One classical fourth-order Runge–Kutta step, including the loss term.
pub fn step_rk4(f: &ComplexField2D, model: &EffectiveModel, dt: f64) -> Result<ComplexField2D> {
    check_rk4_dt(model, f.grid(), dt)?;
    f.ensure_finite()?;
    let mut kernel = HamiltonianKernel::new(f.grid(), model);
    let mut u = f.values().to_vec();
    if dt > 0.0 {
        Rk4Stages::new(u.len()).step(&mut kernel, &mut u, dt);
    }
    ComplexField2D::new(f.grid().clone(), u)
}

/// Precomputed phase tables of the Strang splitting
/// `V(dt/2) A(dt/2) B(dt) A(dt/2) V(dt/2)`, with
/// `A = k p_x² − Ω y p_x` diagonal in (k_x, y) and
/// `B = k p_y² + Ω x p_y` diagonal in (x, k_y).
#[derive(Debug, Clone)]
pub struct StrangPropagator {
    grid: TransverseGrid,
    dt: f64,
    v_half: Vec<Complex64>,
    a_half: Vec<Complex64>,
    b_full: Vec<Complex64>,
}

fn phase(p: f64) -> Complex64 {
    Complex64::new(p.cos(), -p.sin())
}

impl StrangPropagator {
    pub fn new(grid: &TransverseGrid, model: &EffectiveModel, dt: f64) -> Result<Self> {
        if model.has_loss() {
            return Err(Error::UnsupportedLoss);
        }
        check_dt(dt)?;
        let (nx, ny) = (grid.nx(), grid.ny());
        let q = model.quadratic_coefficient();
        let (kin, om) = (model.kinetic, model.rotation);
        let mut v_half = Vec::with_capacity(nx * ny);
        for &x in grid.x() {
            for &y in grid.y() {
                v_half.push(phase(0.5 * dt * (q * (x * x + y * y) + model.offset)));
            }
        }
        let mut a_half = Vec::with_capacity(nx * ny);
        for ik in 0..nx {
            let (k, ko) = (grid.kx()[ik], grid.kx_odd()[ik]);
            for &y in grid.y() {
                a_half.push(phase(0.5 * dt * (kin * k * k - om * y * ko)));
            }
        }
        let mut b_full = Vec::with_capacity(nx * ny);
        for &x in grid.x() {
            for ik in 0..ny {
                let (k, ko) = (grid.ky()[ik], grid.ky_odd()[ik]);
                b_full.push(phase(dt * (kin * k * k + om * x * ko)));
            }
        }
        Ok(Self { grid: grid.clone(), dt, v_half, a_half, b_full })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step(&self, u: &mut [Complex64]) {
        let g = &self.grid;
        let ny = g.ny();
        for (v, p) in u.iter_mut().zip(&self.v_half) {
            *v *= p;
        }
        g.spectral_axis(u, Axis::X, |ik, iy| self.a_half[ik * ny + iy]);
        g.spectral_axis(u, Axis::Y, |ik, ix| self.b_full[ix * ny + ik]);
        g.spectral_axis(u, Axis::X, |ik, iy| self.a_half[ik * ny + iy]);
        for (v, p) in u.iter_mut().zip(&self.v_half) {
            *v *= p;
        }
    }
}

/// One Strang split step of the lossless dynamics.
pub fn step_strang(f: &ComplexField2D, model: &EffectiveModel, dt: f64) -> Result<ComplexField2D> {
    let prop = StrangPropagator::new(f.grid(), model, dt)?;
    f.ensure_finite()?;
    let mut u = f.values().to_vec();
    prop.step(&mut u);
    ComplexField2D::new(f.grid().clone(), u)
}

/// Observables of `f` at time `t`; the energy uses the Hermitian part of H.
pub fn sample(f: &ComplexField2D, kernel: &mut HamiltonianKernel, t: f64) -> Sample {
    let g = f.grid();
    let ny = g.ny();
    let v = f.values();
    let area = g.cell_area();
    let raw: f64 = v.iter().map(|a| a.norm_sqr()).sum();
    let (mut sx, mut sy) = (0.0, 0.0);
    for (ix, &x) in g.x().iter().enumerate() {
        for (iy, &y) in g.y().iter().enumerate() {
            let p = v[ix * ny + iy].norm_sqr();
            sx += x * p;
            sy += y * p;
        }
    }
    let lf = grid::apply_lz_unchecked(f);
    let (lz, lz2, energy) = if raw > 0.0 {
        (
            inner_raw(v, lf.values()).re / raw,
            lf.values().iter().map(|a| a.norm_sqr()).sum::<f64>() / raw,
            kernel.energy(v),
        )
    } else {
        (0.0, 0.0, 0.0)
    };
    let (x, y) = if raw > 0.0 { (sx / raw, sy / raw) } else { (0.0, 0.0) };
    Sample { time: t, norm_sqr: raw * area, x, y, lz, lz2, energy }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    /// Step size; `None` selects [`EffectiveModel::default_dt`].
    pub dt: Option<f64>,
    pub leakage_every: usize,
    pub leakage_tol: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { dt: None, leakage_every: DEFAULT_LEAKAGE_EVERY, leakage_tol: DEFAULT_LEAKAGE_TOL }
    }
}

#[derive(Debug, Clone)]
pub struct Evolution {
    pub trajectory: Trajectory,
    pub final_field: ComplexField2D,
    /// Step actually used (t_final divided by the step count).
    pub dt: f64,
    pub steps: usize,
}

/// Integrates from `f0` to `t_final`, sampling every `sample_every` steps.
pub fn evolve(
    f0: &ComplexField2D,
    model: &EffectiveModel,
    t_final: f64,
    stepper: Stepper,
    sample_every: usize,
    options: &EvolveOptions,
) -> Result<Evolution> {
    evolve_with(f0, model, t_final, stepper, sample_every, options, |_, _, _| Ok(()))
}

/// Step count and effective step for covering `t_final` with steps ≤ `dt`.
pub fn step_plan(t_final: f64, dt: f64) -> Result<(usize, f64)> {
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidParameter { name: "t_final", reason: "must be finite and non-negative" });
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter { name: "dt", reason: "must be positive and finite" });
    }
    if t_final == 0.0 {
        return Ok((0, 0.0));
    }
    let n = (t_final / dt - 1e-9).ceil().max(1.0) as usize;
    Ok((n, t_final / n as f64))
}

/// [`evolve`] with a callback invoked at every sample (step, time, field).
pub fn evolve_with<F>(
    f0: &ComplexField2D,
    model: &EffectiveModel,
    t_final: f64,
    stepper: Stepper,
    sample_every: usize,
    options: &EvolveOptions,
    mut observer: F,
) -> Result<Evolution>
where
    F: FnMut(usize, f64, &ComplexField2D) -> Result<()>,
{
    if sample_every == 0 {
        return Err(Error::InvalidParameter { name: "sample_every", reason: "must be at least 1" });
    }
    let grid = f0.grid().clone();
    f0.ensure_finite()?;
    f0.check_leakage(options.leakage_tol)?;
    let dt_req = options.dt.unwrap_or_else(|| model.default_dt(&grid));
    let (steps, dt) = step_plan(t_final, dt_req)?;
    let strang = match stepper {
        Stepper::Rk4 => {
            check_rk4_dt(model, &grid, dt)?;
            None
        }
        Stepper::Strang => Some(StrangPropagator::new(&grid, model, dt)?),
    };
    let mut kernel = HamiltonianKernel::new(&grid, model);
    let mut energy_kernel = HamiltonianKernel::new(&grid, &model.hermitian_part());
    let mut stages = Rk4Stages::new(grid.len());
    let kz_factor = (-model.kz_decay * dt).exp();
    let apply_kz = model.kz_decay != Complex64::zero();
    let mut field = f0.clone();
    let mut trajectory = Trajectory::new(grid.dx().min(grid.dy()));
    trajectory.samples.push(sample(&field, &mut energy_kernel, 0.0));
    observer(0, 0.0, &field)?;
    let leak_every = options.leakage_every.max(1);
    for step in 1..=steps {
        let u = field.values_mut();
        match &strang {
            Some(p) => p.step(u),
            None => stages.step(&mut kernel, u, dt),
        }
        if apply_kz {
            for v in u.iter_mut() {
                *v *= kz_factor;
            }
        }
        let is_sample = step % sample_every == 0 || step == steps;
        if step % leak_every == 0 || is_sample {
            field.ensure_finite()?;
            field.check_leakage(options.leakage_tol)?;
        }
        if is_sample {
            let t = if step == steps { t_final } else { step as f64 * dt };
            trajectory.samples.push(sample(&field, &mut energy_kernel, t));
            observer(step, t, &field)?;
        }
    }
    Ok(Evolution { trajectory, final_field: field, dt, steps })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundStateOptions {
    pub max_iterations: usize,
    /// Relative energy change between iterations that counts as converged.
    pub tolerance: f64,
    /// Gradient-flow step; `None` uses 1.8 over the spectral-radius bound.
    pub step: Option<f64>,
    pub leakage_every: usize,
    pub leakage_tol: f64,
}

impl Default for GroundStateOptions {
    fn default() -> Self {
        Self {
            max_iterations: 100_000,
            tolerance: 1e-8,
            step: None,
            leakage_every: DEFAULT_LEAKAGE_EVERY,
            leakage_tol: DEFAULT_LEAKAGE_TOL,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GroundState {
    pub field: ComplexField2D,
    pub energy: f64,
    pub iterations: usize,
    /// The model has no confinement; the state is limited only by spreading
    /// and the returned energy is a spreading-limited upper estimate.
    pub unconfined: bool,
}

/// Relaxes a centred Gaussian seed by normalized imaginary-time gradient flow.
pub fn ground_state(
    model: &EffectiveModel,
    grid: &TransverseGrid,
    seed_width: f64,
    options: &GroundStateOptions,
) -> Result<GroundState> {
    if model.has_loss() {
        return Err(Error::NonHermitianConfig);
    }
    let mut field = states::gaussian(grid, (0.0, 0.0), seed_width, (0.0, 0.0))?;
    let tau = options.step.unwrap_or(1.8 / model.spectral_radius_bound(grid));
    let unconfined = model.unconfined();
    let mut kernel = HamiltonianKernel::new(grid, model);
    let mut hf = vec![Complex64::zero(); grid.len()];
    let area = grid.cell_area();
    let mut energy_prev = f64::INFINITY;
    let leak_every = options.leakage_every.max(1);
    for it in 1..=options.max_iterations {
        let u = field.values_mut();
        kernel.apply(u, &mut hf);
        let raw: f64 = u.iter().map(|v| v.norm_sqr()).sum();
        let energy = inner_raw(u, &hf).re / raw;
        for (v, h) in u.iter_mut().zip(&hf) {
            *v -= (h - *v * energy) * tau;
        }
        let s = 1.0 / (u.iter().map(|v| v.norm_sqr()).sum::<f64>() * area).sqrt();
        for v in u.iter_mut() {
            *v *= s;
        }
        if !s.is_finite() {
            return Err(Error::NonFiniteField);
        }
        if (energy - energy_prev).abs() <= options.tolerance * energy.abs().max(1.0) {
            return Ok(GroundState { field, energy, iterations: it, unconfined });
        }
        energy_prev = energy;
        if it % leak_every == 0 {
            if let Err(e) = field.check_leakage(options.leakage_tol) {
                if unconfined {
                    return Ok(GroundState { field, energy, iterations: it, unconfined });
                }
                return Err(e);
            }
        }
    }
    Err(Error::NoConvergence {
        iterations: options.max_iterations,
        residual: (energy_prev - kernel.energy(field.values())).abs(),
    })
}
