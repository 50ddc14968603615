use std::fmt::Write as _;

use rotapol_core::params::{
    adiabaticity_window_with_margin, deflection_angle, degeneracy_by_rim_speed, filling_factor,
    magnetic_length_sq_by_rim_speed, FillingConvention,
};
use rotapol_core::{DerivedQuantities, FeasibilityReport, MediumParams, RotationGeometry};
use serde::Serialize;

use crate::config::ScenarioConfig;
use crate::error::{CliError, CliResult, ConfigContext};
use crate::io::{num, ArtifactWriter};

#[derive(Debug, Clone, Serialize)]
pub struct Filling {
    pub polariton_number: u64,
    pub paper_literal: f64,
    pub disk_density: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Deflection {
    pub beam_offset: f64,
    pub propagation_length: f64,
    pub angle: f64,
}

/// Everything the `derive` scenario reports.
#[derive(Debug, Clone, Serialize)]
pub struct DeriveReport {
    pub medium: MediumParams,
    pub geometry: RotationGeometry,
    pub derived: DerivedQuantities,
    /// Rim-speed forms, kept separate as a cross-check of the primary route.
    pub degeneracy_rim_speed: Option<f64>,
    pub l_mag_rim_speed: Option<f64>,
    pub feasibility: FeasibilityReport,
    pub filling_factor: Option<Filling>,
    pub deflection: Option<Deflection>,
}

pub struct Plan {
    report: DeriveReport,
}

/// Polariton numbers must be whole and non-negative.
pub(super) fn polariton_count(n: f64) -> CliResult<u64> {
    if n >= 0.0 && n.fract() == 0.0 && n <= u64::MAX as f64 {
        Ok(n as u64)
    } else {
        Err(CliError::config(format!("polariton_number {n} is not a non-negative integer")))
    }
}

pub(super) fn build_report(
    medium: MediumParams,
    geometry: RotationGeometry,
    cfg: &ScenarioConfig,
) -> CliResult<DeriveReport> {
    let a = &cfg.analysis;
    let derived = rotapol_core::params::derive_quantities(&medium, &geometry).config_ctx("medium/geometry")?;
    let rotating = derived.b_field > 0.0;
    let degeneracy_rim_speed = rotating.then(|| degeneracy_by_rim_speed(&derived, &geometry)).transpose().config_ctx("degeneracy")?;
    let l_mag_rim_speed = rotating
        .then(|| magnetic_length_sq_by_rim_speed(&derived, &geometry).map(f64::sqrt))
        .transpose()
        .config_ctx("magnetic length")?;
    let feasibility =
        adiabaticity_window_with_margin(&derived, &geometry, a.feasibility_margin).config_ctx("feasibility")?;
    let filling = match a.polariton_number {
        Some(n) if rotating => {
            let n = polariton_count(n)?;
            Some(Filling {
                polariton_number: n,
                paper_literal: filling_factor(n, &derived, &geometry, FillingConvention::PaperLiteral)
                    .config_ctx("filling factor")?,
                disk_density: filling_factor(n, &derived, &geometry, FillingConvention::DiskDensity)
                    .config_ctx("filling factor")?,
            })
        }
        _ => None,
    };
    let deflection = match a.beam_offset {
        Some(rho) => {
            let length = a.propagation_length.unwrap_or(geometry.medium_length);
            Some(Deflection {
                beam_offset: rho,
                propagation_length: length,
                angle: deflection_angle(&derived, rho, length).config_ctx("deflection")?,
            })
        }
        None => None,
    };
    Ok(DeriveReport {
        medium,
        geometry,
        derived,
        degeneracy_rim_speed,
        l_mag_rim_speed,
        feasibility,
        filling_factor: filling,
        deflection,
    })
}

pub fn prepare(cfg: &ScenarioConfig) -> CliResult<Plan> {
    let (medium, geometry) = cfg.medium_geometry()?;
    Ok(Plan { report: build_report(medium, geometry, cfg)? })
}

fn row(out: &mut String, name: &str, value: Option<f64>, unit: &str) {
    let v = value.map(num).unwrap_or_else(|| "undefined".to_string());
    let _ = writeln!(out, "{name:<24} {v:>24}  {unit}");
}

pub fn render_text(r: &DeriveReport) -> String {
    let d = &r.derived;
    let f = &r.feasibility;
    let mut s = String::new();
    row(&mut s, "theta", Some(d.theta), "rad");
    row(&mut s, "phi", Some(d.phi), "rad");
    row(&mut s, "sin2_theta", Some(d.sin2_theta), "");
    row(&mut s, "cos2_theta", Some(d.cos2_theta), "");
    row(&mut s, "v_g", Some(d.v_g), "m/s");
    row(&mut s, "l_abs", Some(d.l_abs), "m");
    row(&mut s, "m_perp", Some(d.m_perp), "kg");
    row(&mut s, "m_par", d.m_par, "kg");
    row(&mut s, "b_field", Some(d.b_field), "kg/s");
    row(&mut s, "omega_c", Some(d.omega_c), "rad/s");
    row(&mut s, "l_mag", d.l_mag, "m");
    row(&mut s, "l_mag_rim_speed", r.l_mag_rim_speed, "m");
    row(&mut s, "degeneracy", d.degeneracy, "");
    row(&mut s, "degeneracy_rim_speed", r.degeneracy_rim_speed, "");
    row(&mut s, "gamma_rot_re", Some(d.gamma_rot.re), "rad/s");
    row(&mut s, "gamma_rot_im", Some(d.gamma_rot.im), "rad/s");
    row(&mut s, "d_diff", Some(d.d_diff), "m^2/s");
    row(&mut s, "v_rot", Some(d.v_rot), "m/s");
    row(&mut s, "nu_min", Some(f.nu_min), "rad/s");
    row(&mut s, "nu_max_scale", Some(f.nu_max_scale), "rad/s");
    row(&mut s, "margin_low", Some(f.margin_low), "");
    row(&mut s, "margin_high", Some(f.margin_high), "");
    row(&mut s, "loss_ratio", Some(f.loss_ratio), "");
    let _ = writeln!(s, "{:<24} {:>24}  (margin {})", "feasible", f.feasible, f.margin);
    if let Some(fill) = &r.filling_factor {
        row(&mut s, "filling_paper_literal", Some(fill.paper_literal), "");
        row(&mut s, "filling_disk_density", Some(fill.disk_density), "");
    }
    if let Some(defl) = &r.deflection {
        row(&mut s, "deflection_angle", Some(defl.angle), "rad");
    }
    s
}

impl Plan {
    pub fn execute(self, out: &mut ArtifactWriter) -> CliResult<Option<String>> {
        let text = render_text(&self.report);
        out.json("derived.json", &self.report)?;
        out.text("derived.txt", &text)?;
        let json = serde_json::to_string_pretty(&self.report).expect("report serializes");
        Ok(Some(format!("{text}\n{json}\n")))
    }
}
