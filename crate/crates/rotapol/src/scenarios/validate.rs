//! Effective model against the three-field model over a range of g²n at
//! fixed mixing angles.

use rayon::prelude::*;
use rotapol_core::full::{compare_models, CompareOptions, FullConfig};
use rotapol_core::observables::linear_fit;
use rotapol_core::ComplexField2D;
use serde_json::json;

use super::{gnuplot, Setup};
use crate::config::ScenarioConfig;
use crate::error::{CliError, CliResult, ConfigContext, NumericsContext};
use crate::io::{num, ArtifactWriter};

struct Point {
    factor: f64,
    config: FullConfig,
    stiffness: f64,
}

pub struct Plan {
    setup: Setup,
    points: Vec<Point>,
    psi0: ComplexField2D,
    t_final: f64,
    options: CompareOptions,
}

pub fn prepare(cfg: &ScenarioConfig) -> CliResult<Plan> {
    let block = cfg.validate.as_ref().ok_or_else(|| CliError::config("`validate` block is required"))?;
    if block.g2n_factors.len() < 2 {
        return Err(CliError::config("`validate.g2n_factors` needs at least two entries"));
    }
    if cfg.model.potential_mode.is_some() || cfg.model.include_rot_loss {
        return Err(CliError::config("validate fixes the effective counterpart; remove `potential_mode`/`include_rot_loss`"));
    }
    let setup = Setup::new(cfg)?;
    let n = &cfg.numerics;
    if n.sample_every == 0 {
        return Err(CliError::config("`numerics.sample_every` must be at least 1"));
    }
    let base = setup.full_config(cfg);
    let mut points = Vec::with_capacity(block.g2n_factors.len());
    for &factor in &block.g2n_factors {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(CliError::config(format!("g2n factor {factor} must be positive")));
        }
        let s = factor.sqrt();
        let mut config = base;
        config.medium.coupling_gsqrt_n *= s;
        config.medium.rabi_plus *= s;
        config.medium.rabi_minus *= s;
        let (model, _) = config.model(setup.si_extent).config_ctx("three-field model")?;
        points.push(Point { factor, config, stiffness: model.stiffness() });
    }
    let dt = match n.dt {
        Some(dt) if dt > 0.0 && dt.is_finite() => Some(setup.time(dt)),
        Some(_) => return Err(CliError::config("`numerics.dt` must be positive")),
        None => None,
    };
    let psi0 = setup.initial_field(cfg)?;
    let t_final = setup.time(cfg.t_final()?);
    let options = CompareOptions { dt, sample_every: n.sample_every, leakage_tol: n.leakage_tol };
    Ok(Plan { setup, points, psi0, t_final, options })
}

impl Plan {
    pub fn execute(self, out: &mut ArtifactWriter, plot: bool) -> CliResult<Option<String>> {
        let results: Vec<_> = self
            .points
            .par_iter()
            .map(|p| compare_models(&p.config, &self.psi0, self.t_final, &self.options))
            .collect();
        let mut rows = Vec::with_capacity(results.len());
        for (p, r) in self.points.iter().zip(results) {
            let cmp = r.numerics(&format!("model comparison at g2n factor {}", p.factor))?;
            rows.push((p, cmp.deviation, cmp.epsilon));
        }
        out.csv(
            "validate.csv",
            &["g2n_factor", "g2n", "stiffness", "epsilon", "deviation"],
            rows.iter().map(|(p, dev, eps)| {
                vec![num(p.factor), num(p.config.medium.g2n()), num(p.stiffness), num(*eps), num(*dev)]
            }),
        )?;
        let ln_eps: Vec<f64> = rows.iter().map(|r| r.2.ln()).collect();
        let ln_dev: Vec<f64> = rows.iter().map(|r| r.1.ln()).collect();
        let fit = linear_fit(&ln_eps, &ln_dev).numerics("log-log fit")?;
        let g2n: Vec<f64> = rows.iter().map(|r| r.0.config.medium.g2n()).collect();
        let decades = (g2n.iter().cloned().fold(f64::MIN, f64::max) / g2n.iter().cloned().fold(f64::MAX, f64::min)).log10();
        let summary = json!({
            "grid": self.setup.grid_json(),
            "units": self.setup.units_json(),
            "t_final": self.t_final,
            "loglog_fit": fit,
            "g2n_decades": decades,
            "rows": rows.iter().map(|(p, dev, eps)| json!({
                "g2n_factor": p.factor,
                "g2n": p.config.medium.g2n(),
                "stiffness": p.stiffness,
                "epsilon": eps,
                "deviation": dev,
            })).collect::<Vec<_>>(),
        });
        out.json("validate.json", &summary)?;
        gnuplot(
            out,
            plot,
            "set logscale xy\nset xlabel 'epsilon'\nset ylabel 'deviation'\nplot 'validate.csv' using 4:5 with linespoints pt 7\n",
        )?;
        Ok(Some(format!("log-log slope {} over {} decades of g2n\n", fit.slope, decades)))
    }
}
