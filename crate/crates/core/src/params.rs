//! Physical parameters of the rotating double-Λ medium and every closed-form
//! quantity that follows from them: mixing angles, effective masses, the
//! synthetic magnetic field, magnetic length, Landau degeneracy, loss and
//! diffusion rates, deflection and the adiabaticity window.
//!
//! All inputs and outputs are SI. Two formula families are kept deliberately
//! separate: the primary route works with `g²n` and `Ω²` directly (it stays
//! finite for `γ = 0`), while [`magnetic_length_sq_by_rim_speed`] and
//! [`degeneracy_by_rim_speed`] evaluate the rim-speed forms so the two can be
//! cross-checked.

use core::f64::consts::{PI, TAU};

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Reduced Planck constant, CODATA 2018 (J·s).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Speed of light in vacuum, exact by definition (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Default safety factor used to interpret "≪" in the adiabaticity window.
pub const DEFAULT_FEASIBILITY_MARGIN: f64 = 10.0;

/// Optical and atomic parameters of the EIT medium.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct MediumParams {
    /// Collective probe coupling g√n (rad/s).
    pub coupling_gsqrt_n: f64,
    /// Control Rabi frequency Ω₊ (rad/s).
    pub rabi_plus: f64,
    /// Control Rabi frequency Ω₋ (rad/s).
    pub rabi_minus: f64,
    /// Excited-state decay rate γ (rad/s).
    pub gamma: f64,
    /// One-photon detuning Δ (rad/s).
    pub delta_single: f64,
    /// Two-photon detuning δ (rad/s).
    #[cfg_attr(feature = "serde", serde(default))]
    pub delta_two_photon: f64,
    /// Probe wavelength λ (m); k_p = 2π/λ.
    pub probe_wavelength: f64,
    /// Speed of light used by the dispersion relations (m/s).
    #[cfg_attr(feature = "serde", serde(default = "default_speed_of_light"))]
    pub speed_of_light: f64,
}

#[cfg(feature = "serde")]
fn default_speed_of_light() -> f64 {
    SPEED_OF_LIGHT
}

/// Rotation and extent of the medium.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct RotationGeometry {
    /// Rotation angular frequency ν (rad/s); the sign sets the rotation sense.
    pub nu: f64,
    /// Medium radius R (m).
    pub radius: f64,
    /// Medium length L (m).
    pub medium_length: f64,
    /// Longitudinal extent L_p of the stationary polariton (m).
    pub polariton_length: f64,
}

/// Everything the closed-form analysis derives from a parameter set.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DerivedQuantities {
    pub theta: f64,
    pub phi: f64,
    /// sin²θ evaluated as g²n/(g²n + Ω²).
    pub sin2_theta: f64,
    /// cos²θ evaluated as Ω²/(g²n + Ω²).
    pub cos2_theta: f64,
    /// Rotation rate copied from the geometry (rad/s, signed).
    pub nu: f64,
    pub probe_wavelength: f64,
    pub k_p: f64,
    pub speed_of_light: f64,
    pub v_g: f64,
    pub l_abs: f64,
    pub m_perp: f64,
    /// `None` when Δ = 0.
    pub m_par: Option<f64>,
    /// |B| = 2 m⊥ |ν| sin²θ (kg/s).
    pub b_field: f64,
    /// |ω_c| = |B|/m⊥ (rad/s).
    pub omega_c: f64,
    /// `None` when B = 0.
    pub l_mag: Option<f64>,
    pub gamma_rot: Complex64,
    pub d_diff: f64,
    pub v_rot: f64,
    /// Landau-level degeneracy over the disk of radius R; `None` when B = 0.
    pub degeneracy: Option<f64>,
}

impl DerivedQuantities {
    /// Longitudinal mass, or [`Error::UndefinedMass`] when Δ = 0.
    pub fn m_par_checked(&self) -> Result<f64> {
        self.m_par.ok_or(Error::UndefinedMass)
    }

    /// Magnetic length, or [`Error::UndefinedField`] without rotation.
    pub fn l_mag_checked(&self) -> Result<f64> {
        self.l_mag.ok_or(Error::UndefinedField)
    }

    /// Cyclotron frequency carrying the sign of ν.
    pub fn signed_omega_c(&self) -> f64 {
        2.0 * self.nu * self.sin2_theta
    }

    /// Angular velocity ν sin²θ with which the polariton is dragged.
    pub fn drag_rate(&self) -> f64 {
        self.nu * self.sin2_theta
    }
}

/// Adiabaticity window of the rotation frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FeasibilityReport {
    /// Lower threshold ½(v_g/L_abs)(L_abs/L_p)² (rad/s).
    pub nu_min: f64,
    /// Upper scale (v_g/L_abs)/cos⁴θ (rad/s).
    pub nu_max_scale: f64,
    pub margin_low: f64,
    pub margin_high: f64,
    /// Re Γ⊥_rot / ω_c.
    pub loss_ratio: f64,
    pub margin: f64,
    pub feasible: bool,
}

/// Convention used by [`filling_factor`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum FillingConvention {
    /// ½·N·(λ/R)·(v_g/v_rot), as printed.
    PaperLiteral,
    /// N divided by the Landau degeneracy of the disk.
    DiskDensity,
}

impl MediumParams {
    /// Reference parameter set P0: λ = 1 µm, cos²θ = 10⁻⁵, v_g = 3×10³ m/s,
    /// L_abs = 1 cm.
    ///
    /// The rounded speed of light 3×10⁸ m/s is used so that cos²θ = 10⁻⁵ and
    /// v_g = 3×10³ m/s hold simultaneously.
    pub fn reference_p0() -> Self {
        let speed_of_light = 3.0e8;
        let cos2 = 1.0e-5;
        let l_abs = 0.01;
        let omega = 1.0e7;
        let g2n = omega * omega * (1.0 - cos2) / cos2;
        let half = omega / core::f64::consts::SQRT_2;
        Self {
            coupling_gsqrt_n: g2n.sqrt(),
            rabi_plus: half,
            rabi_minus: half,
            gamma: l_abs * g2n / speed_of_light,
            delta_single: TAU * 1.0e6,
            delta_two_photon: 0.0,
            probe_wavelength: 1.0e-6,
            speed_of_light,
        }
    }

    /// Total control Rabi frequency squared, Ω₊² + Ω₋².
    pub fn omega_sq(&self) -> f64 {
        self.rabi_plus * self.rabi_plus + self.rabi_minus * self.rabi_minus
    }

    pub fn g2n(&self) -> f64 {
        self.coupling_gsqrt_n * self.coupling_gsqrt_n
    }

    pub fn k_p(&self) -> f64 {
        TAU / self.probe_wavelength
    }

    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("coupling_gsqrt_n", self.coupling_gsqrt_n),
            ("rabi_plus", self.rabi_plus),
            ("rabi_minus", self.rabi_minus),
            ("gamma", self.gamma),
        ];
        for (name, v) in rates {
            if !v.is_finite() {
                return Err(Error::InvalidParameter { name, reason: "must be finite" });
            }
            if v < 0.0 {
                return Err(Error::InvalidParameter { name, reason: "must be non-negative" });
            }
        }
        for (name, v) in [
            ("delta_single", self.delta_single),
            ("delta_two_photon", self.delta_two_photon),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter { name, reason: "must be finite" });
            }
        }
        if !(self.probe_wavelength > 0.0 && self.probe_wavelength.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "probe_wavelength",
                reason: "must be positive",
            });
        }
        if !(self.speed_of_light > 0.0 && self.speed_of_light.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "speed_of_light",
                reason: "must be positive",
            });
        }
        Ok(())
    }
}

impl RotationGeometry {
    /// Geometry of P0: ν = 628.3 rad/s, R = 1 cm, L = 10 cm, L_p = 0.3 m.
    pub fn reference_p0() -> Self {
        Self {
            nu: 628.3,
            radius: 0.01,
            medium_length: 0.1,
            polariton_length: 0.3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.nu.is_finite() {
            return Err(Error::InvalidParameter { name: "nu", reason: "must be finite" });
        }
        for (name, v) in [
            ("radius", self.radius),
            ("medium_length", self.medium_length),
            ("polariton_length", self.polariton_length),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter { name, reason: "must be positive" });
            }
        }
        Ok(())
    }
}

/// Mixing angles (θ, φ) with tanθ = g√n/Ω and tanφ = Ω₋/Ω₊.
pub fn mixing_angles(medium: &MediumParams) -> Result<(f64, f64)> {
    medium.validate()?;
    let omega_sq = medium.omega_sq();
    if omega_sq <= 0.0 {
        return Err(Error::ZeroControlField);
    }
    let theta = medium.coupling_gsqrt_n.atan2(omega_sq.sqrt());
    let phi = medium.rabi_minus.atan2(medium.rabi_plus);
    Ok((theta, phi))
}

/// Evaluates the full closed-form chain for a parameter set.
///
/// Rates are written in forms that stay finite for γ = 0:
/// Γ⊥_rot = ν² sin²θ cos²θ (γ + iΔ)/g²n equals
/// (L_abs/v_g) ν² sin²θ cos⁴θ (1 + iΔ/γ), and
/// m∥ = ħ g²n / (2 c v_g Δ) equals ħγ/(2 v_g L_abs Δ).
pub fn derive_quantities(medium: &MediumParams, geom: &RotationGeometry) -> Result<DerivedQuantities> {
    geom.validate()?;
    let (theta, phi) = mixing_angles(medium)?;
    let g2n = medium.g2n();
    if g2n <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "coupling_gsqrt_n",
            reason: "must be positive for a polariton with a matter component",
        });
    }
    let omega_sq = medium.omega_sq();
    let total = g2n + omega_sq;
    let cos2 = omega_sq / total;
    let sin2 = g2n / total;
    if !(cos2 > 0.0) || !cos2.is_normal() {
        return Err(Error::DegenerateGroupVelocity { cos2_theta: cos2 });
    }
    let c = medium.speed_of_light;
    let k_p = medium.k_p();
    let v_g = c * cos2;
    let l_abs = c * medium.gamma / g2n;
    let m_perp = HBAR * k_p / v_g;
    let m_par = if medium.delta_single != 0.0 {
        Some(HBAR * g2n / (2.0 * c * v_g * medium.delta_single))
    } else {
        None
    };
    let nu = geom.nu;
    let b_field = 2.0 * m_perp * nu.abs() * sin2;
    let omega_c = 2.0 * nu.abs() * sin2;
    let (l_mag, degeneracy) = if b_field > 0.0 {
        let l2 = HBAR / b_field;
        (Some(l2.sqrt()), Some(geom.radius * geom.radius / (2.0 * l2)))
    } else {
        (None, None)
    };
    let rot = nu * nu * sin2 * cos2 / g2n;
    let gamma_rot = Complex64::new(rot * medium.gamma, rot * medium.delta_single);
    Ok(DerivedQuantities {
        theta,
        phi,
        sin2_theta: sin2,
        cos2_theta: cos2,
        nu,
        probe_wavelength: medium.probe_wavelength,
        k_p,
        speed_of_light: c,
        v_g,
        l_abs,
        m_perp,
        m_par,
        b_field,
        omega_c,
        l_mag,
        gamma_rot,
        d_diff: v_g * l_abs,
        v_rot: nu.abs() * geom.radius,
        degeneracy,
    })
}

/// L_mag² from the rim-speed form λ R v_g / (4π v_rot sin²θ).
///
/// The sin²θ factor is kept explicit; dropping it reproduces the printed
/// form, which is correct only to O(cos²θ).
pub fn magnetic_length_sq_by_rim_speed(derived: &DerivedQuantities, geom: &RotationGeometry) -> Result<f64> {
    if derived.v_rot == 0.0 || derived.sin2_theta == 0.0 {
        return Err(Error::UndefinedField);
    }
    Ok(derived.probe_wavelength * geom.radius * derived.v_g
        / (4.0 * PI * derived.v_rot * derived.sin2_theta))
}

/// Landau degeneracy from the rim-speed form 2π (R/λ)(v_rot/v_g) sin²θ.
pub fn degeneracy_by_rim_speed(derived: &DerivedQuantities, geom: &RotationGeometry) -> Result<f64> {
    if derived.v_rot == 0.0 || derived.sin2_theta == 0.0 {
        return Err(Error::UndefinedField);
    }
    Ok(TAU * (geom.radius / derived.probe_wavelength) * (derived.v_rot / derived.v_g) * derived.sin2_theta)
}

/// Filling factor of `n_polaritons` polaritons.
pub fn filling_factor(
    n_polaritons: u64,
    derived: &DerivedQuantities,
    geom: &RotationGeometry,
    convention: FillingConvention,
) -> Result<f64> {
    if derived.b_field <= 0.0 {
        return Err(Error::UndefinedField);
    }
    let n = n_polaritons as f64;
    match convention {
        FillingConvention::PaperLiteral => {
            Ok(0.5 * n * (derived.probe_wavelength / geom.radius) * (derived.v_g / derived.v_rot))
        }
        FillingConvention::DiskDensity => {
            let deg = derived.degeneracy.ok_or(Error::UndefinedField)?;
            Ok(n / deg)
        }
    }
}

/// Deflection Δα = ω_c ρ L / v_g, signed by the rotation sense.
pub fn deflection_angle(derived: &DerivedQuantities, offset_rho: f64, medium_length: f64) -> Result<f64> {
    if !(derived.v_g > 0.0) {
        return Err(Error::InvalidParameter { name: "v_g", reason: "must be positive" });
    }
    if !offset_rho.is_finite() || !(medium_length >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "medium_length",
            reason: "offset must be finite and length non-negative",
        });
    }
    Ok(derived.signed_omega_c() * offset_rho * medium_length / derived.v_g)
}

/// Adiabaticity window for the rotation rate with the default margin.
pub fn adiabaticity_window(derived: &DerivedQuantities, geom: &RotationGeometry) -> Result<FeasibilityReport> {
    adiabaticity_window_with_margin(derived, geom, DEFAULT_FEASIBILITY_MARGIN)
}

pub fn adiabaticity_window_with_margin(
    derived: &DerivedQuantities,
    geom: &RotationGeometry,
    margin: f64,
) -> Result<FeasibilityReport> {
    if !(derived.l_abs > 0.0) {
        return Err(Error::InvalidParameter { name: "l_abs", reason: "must be positive" });
    }
    if !(derived.v_g > 0.0) {
        return Err(Error::InvalidParameter { name: "v_g", reason: "must be positive" });
    }
    if !(margin > 0.0) {
        return Err(Error::InvalidParameter { name: "margin", reason: "must be positive" });
    }
    let rate = derived.v_g / derived.l_abs;
    let ratio = derived.l_abs / geom.polariton_length;
    let nu_min = 0.5 * rate * ratio * ratio;
    let nu_max_scale = rate / (derived.cos2_theta * derived.cos2_theta);
    let nu = derived.nu.abs();
    let margin_low = nu / nu_min;
    let margin_high = nu_max_scale / nu;
    let loss_ratio = if derived.omega_c > 0.0 {
        derived.gamma_rot.re / derived.omega_c
    } else {
        0.0
    };
    let feasible = margin_low > margin && margin_high > margin && loss_ratio < 1.0 / margin;
    Ok(FeasibilityReport {
        nu_min,
        nu_max_scale,
        margin_low,
        margin_high,
        loss_ratio,
        margin,
        feasible,
    })
}
