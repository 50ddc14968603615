//! Scenario planning and execution.
//!
//! Each scenario is split into a `prepare` step that validates the whole
//! configuration and builds every input, and an `execute` step that runs the
//! numerics and writes artifacts. Errors from `prepare` are configuration
//! errors; errors from `execute` are numerics or i/o failures.

mod derive;
mod dynamics;
mod landau;
mod scan;
mod validate;

use rotapol_core::effective::{EffectiveConfig, EffectiveModel, PotentialMode, Stepper, Units, FREE_LENGTH_DIVISOR};
use rotapol_core::full::{FullConfig, FullModel};
use rotapol_core::params::derive_quantities;
use rotapol_core::{states, ComplexField2D, DerivedQuantities, MediumParams, RotationGeometry, TransverseGrid};
use serde_json::{json, Value};

use crate::config::{InitialState, ModelKind, Scenario, ScenarioConfig, UnitSystem, DEFAULT_EXTENT, DEFAULT_GRID};
use crate::error::{CliError, CliResult, ConfigContext};
use crate::io::{load_snapshot, ArtifactWriter};

/// A fully validated scenario, ready to run.
pub enum Plan {
    Derive(derive::Plan),
    Landau(landau::Plan),
    Dynamics(dynamics::Plan),
    Validate(validate::Plan),
    Scan(scan::Plan),
}

pub fn prepare(scenario: Scenario, cfg: &ScenarioConfig) -> CliResult<Plan> {
    cfg.check_scenario(scenario)?;
    if cfg.output.snapshot_every == 0 {
        return Err(CliError::config("`output.snapshot_every` must be at least 1"));
    }
    Ok(match scenario {
        Scenario::Derive => Plan::Derive(derive::prepare(cfg)?),
        Scenario::Landau => Plan::Landau(landau::prepare(cfg)?),
        Scenario::Evolve | Scenario::Cyclotron | Scenario::RotateImage => {
            Plan::Dynamics(dynamics::prepare(scenario, cfg)?)
        }
        Scenario::Validate => Plan::Validate(validate::prepare(cfg)?),
        Scenario::Scan => Plan::Scan(scan::prepare(cfg)?),
    })
}

impl Plan {
    /// Runs the plan; returns text meant for standard output, if any.
    pub fn execute(self, out: &mut ArtifactWriter, gnuplot: bool) -> CliResult<Option<String>> {
        match self {
            Plan::Derive(p) => p.execute(out),
            Plan::Landau(p) => p.execute(out, gnuplot),
            Plan::Dynamics(p) => p.execute(out, gnuplot),
            Plan::Validate(p) => p.execute(out, gnuplot),
            Plan::Scan(p) => p.execute(out, gnuplot),
        }
    }
}

/// Conversion between configured quantities and model units.
#[derive(Debug, Clone, Copy)]
struct Scale {
    length: f64,
    time: f64,
}

/// Shared physical setup: parameters, derived quantities, grid, units.
#[derive(Debug, Clone)]
struct Setup {
    medium: MediumParams,
    geometry: RotationGeometry,
    derived: DerivedQuantities,
    grid: TransverseGrid,
    /// SI size of the model units, when they are defined.
    units: Option<Units>,
    scale: Scale,
    /// Extent handed to the model builders [m]; only matters for ν = 0.
    si_extent: f64,
    /// Initial field, loaded with the grid when it comes from a snapshot.
    snapshot: Option<ComplexField2D>,
}

impl Setup {
    fn new(cfg: &ScenarioConfig) -> CliResult<Self> {
        let (medium, geometry) = cfg.medium_geometry()?;
        let derived = derive_quantities(&medium, &geometry).config_ctx("medium/geometry")?;
        let n = &cfg.numerics;
        let si = n.units == UnitSystem::Si;
        let extent = match (n.extent, si) {
            (Some(e), _) => e.get(),
            (None, false) => (DEFAULT_EXTENT, DEFAULT_EXTENT),
            (None, true) => return Err(CliError::config("`numerics.extent` is required with SI units")),
        };
        let rotating = derived.omega_c > 0.0;
        let si_extent = if si { extent.0.min(extent.1) } else { FREE_LENGTH_DIVISOR };
        let units = Units::for_derived(&derived, si_extent).config_ctx("units")?;
        let scale = if si { Scale { length: units.length, time: units.time } } else { Scale { length: 1.0, time: 1.0 } };
        let units = (rotating || si).then_some(units);
        let snapshot = match &cfg.initial {
            Some(InitialState::Snapshot { path }) => Some(load_snapshot(&cfg.resolve(path))?.0),
            _ => None,
        };
        let grid = match &snapshot {
            Some(f) => {
                let g = f.grid().clone();
                if let Some(p) = n.grid {
                    if p.get() != (g.nx(), g.ny()) {
                        return Err(CliError::config("`numerics.grid` disagrees with the snapshot"));
                    }
                }
                if let Some(e) = n.extent {
                    let (ex, ey) = e.get();
                    if ex / scale.length != g.extent_x() || ey / scale.length != g.extent_y() {
                        return Err(CliError::config("`numerics.extent` disagrees with the snapshot"));
                    }
                }
                g
            }
            None => {
                let (nx, ny) = n.grid.map(|p| p.get()).unwrap_or((DEFAULT_GRID, DEFAULT_GRID));
                TransverseGrid::new(nx, ny, extent.0 / scale.length, extent.1 / scale.length)
                    .config_ctx("numerics.grid")?
            }
        };
        Ok(Self { medium, geometry, derived, grid, units, scale, si_extent, snapshot })
    }

    fn effective_model(&self, cfg: &ScenarioConfig) -> CliResult<EffectiveModel> {
        let m = &cfg.model;
        let mut ec = EffectiveConfig::new(self.derived, m.potential_mode());
        ec.include_rot_loss = m.include_rot_loss;
        ec.rot_loss_mass_correction = m.rot_loss_mass_correction;
        ec.kz = m.kz;
        ec.delta_two_photon = self.medium.delta_two_photon;
        ec.nondimensional = cfg.numerics.units == UnitSystem::Model;
        Ok(ec.model(self.si_extent).config_ctx("effective model")?.0)
    }

    fn full_config(&self, cfg: &ScenarioConfig) -> FullConfig {
        let mut fc = FullConfig::new(self.medium, self.geometry);
        fc.kz = cfg.model.kz;
        fc.use_gn_only = cfg.model.use_gn_only;
        fc
    }

    fn full_model(&self, cfg: &ScenarioConfig) -> CliResult<FullModel> {
        Ok(self.full_config(cfg).model(self.si_extent).config_ctx("three-field model")?.0)
    }

    fn time(&self, t: f64) -> f64 {
        t / self.scale.time
    }

    fn initial_field(&self, cfg: &ScenarioConfig) -> CliResult<ComplexField2D> {
        let l = self.scale.length;
        let g = &self.grid;
        let field = match cfg.initial()? {
            InitialState::Gaussian { center, width, momentum } => states::gaussian(
                g,
                (center[0] / l, center[1] / l),
                width / l,
                (momentum[0] * l, momentum[1] * l),
            ),
            InitialState::Vortex { m, width } => states::vortex(g, *m, width / l),
            InitialState::LandauVortex { m } => {
                if self.derived.omega_c <= 0.0 {
                    return Err(CliError::config("`landau_vortex` needs a rotating medium"));
                }
                // The model length unit is the magnetic length.
                states::landau_vortex(g, *m, 1.0)
            }
            InitialState::HermiteGaussian { i, j, width } => states::hermite_gaussian(g, *i, *j, width / l),
            InitialState::Snapshot { .. } => Ok(self.snapshot.clone().expect("snapshot loaded with the grid")),
        }
        .config_ctx("initial")?;
        field.ensure_finite().config_ctx("initial")?;
        if field.norm_sqr() == 0.0 {
            return Err(CliError::config("initial: field has zero norm"));
        }
        field.check_leakage(cfg.numerics.leakage_tol).config_ctx("initial")?;
        Ok(field)
    }

    fn grid_json(&self) -> Value {
        json!({
            "nx": self.grid.nx(),
            "ny": self.grid.ny(),
            "extent_x": self.grid.extent_x(),
            "extent_y": self.grid.extent_y(),
            "safety_radius": self.grid.safety_radius(),
        })
    }

    fn units_json(&self) -> Value {
        match self.units {
            Some(u) => json!({ "length_m": u.length, "time_s": u.time }),
            None => Value::Null,
        }
    }
}

fn check_effective_only(cfg: &ScenarioConfig, what: &str) -> CliResult<()> {
    if cfg.model.kind != ModelKind::Effective {
        return Err(CliError::config(format!("{what} supports only the effective model")));
    }
    Ok(())
}

fn stepper_name(s: Stepper) -> &'static str {
    match s {
        Stepper::Rk4 => "rk4",
        Stepper::Strang => "strang",
    }
}

fn mode_name(m: PotentialMode) -> &'static str {
    match m {
        PotentialMode::Full => "full",
        PotentialMode::Compensated => "compensated",
        PotentialMode::None => "none",
    }
}

fn full_model_json(m: &FullModel) -> Value {
    json!({
        "psi_kinetic": m.psi_kinetic,
        "light_kinetic": m.light_kinetic,
        "nu": m.nu,
        "sin_theta": m.sin,
        "cos_theta": m.cos,
        "kz_coupling": m.kz_coupling,
        "delta": m.delta,
        "d1": [m.d1.re, m.d1.im],
        "d2": [m.d2.re, m.d2.im],
        "stiffness": m.stiffness(),
    })
}

const GNUPLOT_PREAMBLE: &str = "set datafile separator ','\nset key autotitle columnhead\nset grid\n";

fn gnuplot(out: &mut ArtifactWriter, enabled: bool, body: &str) -> CliResult<()> {
    if enabled {
        out.text("plot.gp", &format!("{GNUPLOT_PREAMBLE}{body}"))?;
    }
    Ok(())
}
