//! Sweeps of one or two scalar parameters through the closed-form relations.

use rayon::prelude::*;
use rotapol_core::params::{
    adiabaticity_window_with_margin, deflection_angle, degeneracy_by_rim_speed, derive_quantities, filling_factor,
    FillingConvention,
};
use rotapol_core::{MediumParams, RotationGeometry};
use serde_json::json;

use super::derive::polariton_count;
use super::gnuplot;
use crate::config::{Analysis, ScenarioConfig, Spacing, SweepParam};
use crate::error::{CliError, CliResult};
use crate::io::{num, ArtifactWriter};

pub const MAX_POINTS: usize = 10_000;

pub const COLUMNS: [&str; 26] = [
    "theta",
    "phi",
    "sin2_theta",
    "cos2_theta",
    "v_g",
    "l_abs",
    "m_perp",
    "m_par",
    "b_field",
    "omega_c",
    "l_mag",
    "degeneracy",
    "degeneracy_rim_speed",
    "gamma_rot_re",
    "gamma_rot_im",
    "d_diff",
    "v_rot",
    "nu_min",
    "nu_max_scale",
    "margin_low",
    "margin_high",
    "loss_ratio",
    "feasible",
    "filling_paper_literal",
    "filling_disk_density",
    "deflection_angle",
];

#[derive(Debug, Clone, Copy)]
struct Inputs {
    medium: MediumParams,
    geometry: RotationGeometry,
    polariton_number: Option<f64>,
    beam_offset: Option<f64>,
    propagation_length: Option<f64>,
    margin: f64,
}

type Setter = fn(&mut Inputs, f64);

fn setter(key: &str) -> Option<Setter> {
    Some(match key {
        "medium.coupling_gsqrt_n" => |i, v| i.medium.coupling_gsqrt_n = v,
        "medium.rabi_plus" => |i, v| i.medium.rabi_plus = v,
        "medium.rabi_minus" => |i, v| i.medium.rabi_minus = v,
        "medium.gamma" => |i, v| i.medium.gamma = v,
        "medium.delta_single" => |i, v| i.medium.delta_single = v,
        "medium.delta_two_photon" => |i, v| i.medium.delta_two_photon = v,
        "medium.probe_wavelength" => |i, v| i.medium.probe_wavelength = v,
        "medium.speed_of_light" => |i, v| i.medium.speed_of_light = v,
        "geometry.nu" => |i, v| i.geometry.nu = v,
        "geometry.radius" => |i, v| i.geometry.radius = v,
        "geometry.medium_length" => |i, v| i.geometry.medium_length = v,
        "geometry.polariton_length" => |i, v| i.geometry.polariton_length = v,
        "analysis.polariton_number" => |i, v| i.polariton_number = Some(v),
        "analysis.beam_offset" => |i, v| i.beam_offset = Some(v),
        "analysis.propagation_length" => |i, v| i.propagation_length = Some(v),
        "analysis.feasibility_margin" => |i, v| i.margin = v,
        _ => return None,
    })
}

struct Axis {
    key: String,
    set: Setter,
    values: Vec<f64>,
}

fn axis_values(p: &SweepParam) -> CliResult<Vec<f64>> {
    let values = match (&p.values, p.start, p.stop, p.points) {
        (Some(v), None, None, None) => v.clone(),
        (None, Some(a), Some(b), Some(n)) => {
            if n == 0 {
                return Err(CliError::config(format!("sweep over `{}` has an empty range", p.key)));
            }
            if n > MAX_POINTS {
                return Err(CliError::config(format!("sweep over `{}` exceeds {MAX_POINTS} points", p.key)));
            }
            if n == 1 {
                if a != b {
                    return Err(CliError::config(format!("one-point sweep over `{}` needs start = stop", p.key)));
                }
                vec![a]
            } else {
                match p.spacing {
                    Spacing::Linear => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
                    Spacing::Log => {
                        if !(a > 0.0 && b > 0.0) {
                            return Err(CliError::config(format!("log sweep over `{}` needs positive bounds", p.key)));
                        }
                        let (la, lb) = (a.ln(), b.ln());
                        (0..n)
                            .map(|i| match i {
                                0 => a,
                                i if i == n - 1 => b,
                                i => (la + (lb - la) * i as f64 / (n - 1) as f64).exp(),
                            })
                            .collect()
                    }
                }
            }
        }
        _ => {
            return Err(CliError::config(format!(
                "sweep over `{}` needs either `values` or all of `start`, `stop`, `points`",
                p.key
            )))
        }
    };
    if values.is_empty() {
        return Err(CliError::config(format!("sweep over `{}` has an empty range", p.key)));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(CliError::config(format!("sweep over `{}` has non-finite values", p.key)));
    }
    Ok(values)
}

pub struct Plan {
    base: Inputs,
    axes: Vec<Axis>,
    columns: Vec<&'static str>,
}

pub fn prepare(cfg: &ScenarioConfig) -> CliResult<Plan> {
    let sweep = cfg.sweep.as_ref().ok_or_else(|| CliError::config("`sweep` block is required"))?;
    if sweep.parameters.is_empty() || sweep.parameters.len() > 2 {
        return Err(CliError::config("`sweep.parameters` must name one or two parameters"));
    }
    let (medium, geometry) = cfg.medium_geometry()?;
    let Analysis { polariton_number, beam_offset, propagation_length, feasibility_margin } = cfg.analysis.clone();
    if let Some(n) = polariton_number {
        polariton_count(n)?;
    }
    let base = Inputs { medium, geometry, polariton_number, beam_offset, propagation_length, margin: feasibility_margin };
    let mut axes = Vec::new();
    for p in &sweep.parameters {
        let set = setter(&p.key)
            .ok_or_else(|| CliError::config(format!("`{}` is not a sweepable scalar parameter", p.key)))?;
        if axes.iter().any(|a: &Axis| a.key == p.key) {
            return Err(CliError::config(format!("`{}` is swept twice", p.key)));
        }
        let values = axis_values(p)?;
        if p.key == "analysis.polariton_number" {
            for v in &values {
                polariton_count(*v)?;
            }
        }
        axes.push(Axis { key: p.key.clone(), set, values });
    }
    let total = axes.iter().map(|a| a.values.len()).product::<usize>();
    if total > MAX_POINTS {
        return Err(CliError::config(format!("sweep has {total} points, more than {MAX_POINTS}")));
    }
    let columns = match &sweep.columns {
        None => COLUMNS.to_vec(),
        Some(list) => {
            if list.is_empty() {
                return Err(CliError::config("`sweep.columns` is empty"));
            }
            list.iter()
                .map(|c| {
                    COLUMNS
                        .iter()
                        .copied()
                        .find(|k| k == c)
                        .ok_or_else(|| CliError::config(format!("unknown scan column `{c}`")))
                })
                .collect::<CliResult<_>>()?
        }
    };
    Ok(Plan { base, axes, columns })
}

/// All columns at one parameter point; `None` marks an undefined quantity.
fn evaluate(i: &Inputs) -> rotapol_core::Result<Vec<(&'static str, Option<String>)>> {
    let d = derive_quantities(&i.medium, &i.geometry)?;
    let f = adiabaticity_window_with_margin(&d, &i.geometry, i.margin)?;
    let rotating = d.b_field > 0.0;
    let deg_rim = if rotating { Some(degeneracy_by_rim_speed(&d, &i.geometry)?) } else { None };
    let filling = |conv| -> rotapol_core::Result<Option<f64>> {
        match i.polariton_number {
            Some(n) if rotating => Ok(Some(filling_factor(n as u64, &d, &i.geometry, conv)?)),
            _ => Ok(None),
        }
    };
    let deflection = match i.beam_offset {
        Some(rho) => Some(deflection_angle(&d, rho, i.propagation_length.unwrap_or(i.geometry.medium_length))?),
        None => None,
    };
    let n = |v: f64| Some(num(v));
    Ok(vec![
        ("theta", n(d.theta)),
        ("phi", n(d.phi)),
        ("sin2_theta", n(d.sin2_theta)),
        ("cos2_theta", n(d.cos2_theta)),
        ("v_g", n(d.v_g)),
        ("l_abs", n(d.l_abs)),
        ("m_perp", n(d.m_perp)),
        ("m_par", d.m_par.map(num)),
        ("b_field", n(d.b_field)),
        ("omega_c", n(d.omega_c)),
        ("l_mag", d.l_mag.map(num)),
        ("degeneracy", d.degeneracy.map(num)),
        ("degeneracy_rim_speed", deg_rim.map(num)),
        ("gamma_rot_re", n(d.gamma_rot.re)),
        ("gamma_rot_im", n(d.gamma_rot.im)),
        ("d_diff", n(d.d_diff)),
        ("v_rot", n(d.v_rot)),
        ("nu_min", n(f.nu_min)),
        ("nu_max_scale", n(f.nu_max_scale)),
        ("margin_low", n(f.margin_low)),
        ("margin_high", n(f.margin_high)),
        ("loss_ratio", n(f.loss_ratio)),
        ("feasible", Some(f.feasible.to_string())),
        ("filling_paper_literal", filling(FillingConvention::PaperLiteral)?.map(num)),
        ("filling_disk_density", filling(FillingConvention::DiskDensity)?.map(num)),
        ("deflection_angle", deflection.map(num)),
    ])
}

impl Plan {
    fn point(&self, index: usize) -> (Vec<f64>, Inputs) {
        let mut inputs = self.base;
        let mut coords = Vec::with_capacity(self.axes.len());
        // Row-major: the first parameter varies slowest.
        let mut rest = index;
        let mut digits = vec![0; self.axes.len()];
        for (k, axis) in self.axes.iter().enumerate().rev() {
            digits[k] = rest % axis.values.len();
            rest /= axis.values.len();
        }
        for (axis, &j) in self.axes.iter().zip(&digits) {
            let v = axis.values[j];
            (axis.set)(&mut inputs, v);
            coords.push(v);
        }
        (coords, inputs)
    }

    pub fn execute(self, out: &mut ArtifactWriter, plot: bool) -> CliResult<Option<String>> {
        let total: usize = self.axes.iter().map(|a| a.values.len()).product();
        let rows: Vec<CliResult<Vec<String>>> = (0..total)
            .into_par_iter()
            .map(|idx| {
                let (coords, inputs) = self.point(idx);
                let cells = evaluate(&inputs).map_err(|source| CliError::Numerics {
                    stage: format!("scan point {idx} ({})", self.describe(&coords)),
                    source,
                })?;
                let mut row: Vec<String> = coords.iter().map(|v| num(*v)).collect();
                for col in &self.columns {
                    let cell = cells.iter().find(|(k, _)| k == col).and_then(|(_, v)| v.clone());
                    row.push(cell.unwrap_or_default());
                }
                Ok(row)
            })
            .collect();
        let rows = rows.into_iter().collect::<CliResult<Vec<_>>>()?;
        let mut header: Vec<&str> = self.axes.iter().map(|a| a.key.as_str()).collect();
        header.extend(self.columns.iter().copied());
        out.csv("scan.csv", &header, rows)?;
        let summary = json!({
            "parameters": self.axes.iter().map(|a| json!({ "key": a.key, "points": a.values.len() })).collect::<Vec<_>>(),
            "columns": self.columns,
            "rows": total,
        });
        out.json("scan.json", &summary)?;
        let body = if self.axes.len() == 1 {
            let first = self.columns.iter().position(|c| *c != "feasible").unwrap_or(0) + 2;
            format!("set logscale y\nplot 'scan.csv' using 1:{first} with linespoints\n")
        } else {
            "set dgrid3d\nsplot 'scan.csv' using 1:2:3 with lines\n".to_string()
        };
        gnuplot(out, plot, &body)?;
        Ok(None)
    }

    fn describe(&self, coords: &[f64]) -> String {
        self.axes.iter().zip(coords).map(|(a, v)| format!("{} = {v}", a.key)).collect::<Vec<_>>().join(", ")
    }
}
