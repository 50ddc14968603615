use rotapol_core::effective::EffectiveModel;
use rotapol_core::spectra::{landau_analysis, lowest_eigenpairs, EigenOptions, OperatorHandle, MAX_EIGENPAIRS};
use serde_json::json;

use super::{check_effective_only, gnuplot, mode_name, Setup};
use crate::config::{ScenarioConfig, SpectrumBlock};
use crate::error::{CliError, CliResult, ConfigContext, NumericsContext};
use crate::io::{num, ArtifactWriter};

pub struct Plan {
    setup: Setup,
    model: EffectiveModel,
    op: OperatorHandle,
    spectrum: SpectrumBlock,
    options: EigenOptions,
}

pub fn prepare(cfg: &ScenarioConfig) -> CliResult<Plan> {
    check_effective_only(cfg, "landau")?;
    let setup = Setup::new(cfg)?;
    let model = setup.effective_model(cfg)?;
    let sp = cfg.spectrum.clone();
    if sp.k == 0 || sp.k > MAX_EIGENPAIRS {
        return Err(CliError::config(format!("`spectrum.k` must be in 1..={MAX_EIGENPAIRS}")));
    }
    if !(sp.cluster_tol >= 0.0) {
        return Err(CliError::config("`spectrum.cluster_tol` must be non-negative"));
    }
    if model.omega_c() == 0.0 {
        return Err(CliError::config("landau needs a rotating medium (omega_c > 0)"));
    }
    let op = OperatorHandle::new(&setup.grid, &model).config_ctx("operator")?;
    if sp.k >= op.dim() {
        return Err(CliError::config("`spectrum.k` must be smaller than the grid size"));
    }
    let options = EigenOptions {
        seed: cfg.numerics.seed,
        tol: sp.tol,
        max_iterations: sp.max_iterations,
        guard: sp.guard,
        filter_degree: sp.filter_degree,
        ..Default::default()
    };
    Ok(Plan { setup, model, op, spectrum: sp, options })
}

impl Plan {
    pub fn execute(mut self, out: &mut ArtifactWriter, plot: bool) -> CliResult<Option<String>> {
        let pairs = lowest_eigenpairs(&mut self.op, self.spectrum.k, &self.options).numerics("eigensolver")?;
        let omega_c = self.model.omega_c().abs();
        let report = landau_analysis(&pairs, omega_c, self.spectrum.cluster_tol).numerics("landau analysis")?;
        let rows = (0..report.eigenvalues.len()).map(|i| {
            vec![
                i.to_string(),
                num(report.eigenvalues[i]),
                num(report.residuals[i]),
                report.mean_rho_sq.get(i).copied().map(num).unwrap_or_default(),
                report.inside_fraction.get(i).copied().map(num).unwrap_or_default(),
            ]
        });
        out.csv("eigenvalues.csv", &["index", "eigenvalue", "residual", "mean_rho_sq", "inside_fraction"], rows)?;
        let summary = json!({
            "report": report,
            "first_gap": report.first_gap(),
            "grid": self.setup.grid_json(),
            "units": self.setup.units_json(),
            "potential_mode": mode_name(self.model.mode),
            "model": self.model,
            "eigensolver": {
                "k": self.spectrum.k,
                "seed": self.options.seed,
                "tol": self.options.tol,
                "filter_degree": self.options.filter_degree,
                "iterations": pairs.iterations,
                "matvecs": pairs.matvecs,
                "next_value": pairs.next_value,
            },
        });
        out.json("spectrum.json", &summary)?;
        gnuplot(
            out,
            plot,
            "set xlabel 'index'\nset ylabel 'E / hbar omega_c'\nplot 'eigenvalues.csv' using 1:2 with points pt 7\n",
        )?;
        Ok(Some(format!(
            "lowest eigenvalue {:?}, first gap {:?}, flux count {:?}, lowest-level count {:?}, agreement {:?}\n",
            report.eigenvalues.first(),
            report.first_gap(),
            report.flux_count,
            report.lowest_cluster_count,
            report.agreement
        )))
    }
}
