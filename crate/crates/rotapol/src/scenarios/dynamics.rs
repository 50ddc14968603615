//! `evolve`, `cyclotron` and `rotate-image`: one time evolution each, with
//! different analyses on top.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rotapol_core::effective::{evolve, evolve_with, EffectiveModel, EvolveOptions, Stepper};
use rotapol_core::full::{adiabatic_init, evolve_full_with, fidelity, FullEvolveOptions, FullModel};
use rotapol_core::grid::{derivative, rotate_field_with_tolerance, Axis};
use rotapol_core::observables::{centroid, fit_cyclotron, image_rotation_angle, linear_fit, norm_decay_rate, symmetry_order};
use rotapol_core::{ComplexField2D, Trajectory};
use serde_json::{json, Value};

use super::{full_model_json, gnuplot, mode_name, stepper_name, Setup};
use crate::config::{ModelKind, Scenario, ScenarioConfig};
use crate::error::{CliError, CliResult, NumericsContext};
use crate::io::{num, trajectory_rows, ArtifactWriter, TRAJECTORY_HEADER};

enum Model {
    Effective { model: EffectiveModel, stepper: Stepper },
    Full(FullModel),
}

pub struct Plan {
    scenario: Scenario,
    setup: Setup,
    model: Model,
    /// Effective counterpart used for reference values (cyclotron, drag rate).
    reference: EffectiveModel,
    psi0: ComplexField2D,
    t_final: f64,
    dt: f64,
    sample_every: usize,
    leakage_every: usize,
    leakage_tol: f64,
    snapshots: Option<usize>,
}

pub fn prepare(scenario: Scenario, cfg: &ScenarioConfig) -> CliResult<Plan> {
    let setup = Setup::new(cfg)?;
    let n = &cfg.numerics;
    if n.sample_every == 0 {
        return Err(CliError::config("`numerics.sample_every` must be at least 1"));
    }
    if !(n.leakage_tol > 0.0) {
        return Err(CliError::config("`numerics.leakage_tol` must be positive"));
    }
    let t_final = setup.time(cfg.t_final()?);
    let dt_req = match n.dt {
        Some(dt) if dt > 0.0 && dt.is_finite() => Some(setup.time(dt)),
        Some(_) => return Err(CliError::config("`numerics.dt` must be positive")),
        None => None,
    };
    let (model, reference, dt) = match cfg.model.kind {
        ModelKind::Effective => {
            let model = setup.effective_model(cfg)?;
            let stepper = n.stepper.unwrap_or(Stepper::Rk4);
            if stepper == Stepper::Strang && model.has_loss() {
                return Err(CliError::config("the strang stepper does not support rotational loss; use rk4"));
            }
            let dt = dt_req.unwrap_or_else(|| model.default_dt(&setup.grid));
            if stepper == Stepper::Rk4 && dt > model.rk4_step_bound(&setup.grid) {
                return Err(CliError::config(format!(
                    "dt {dt:e} exceeds the RK4 stability bound {:e} (model units)",
                    model.rk4_step_bound(&setup.grid)
                )));
            }
            (Model::Effective { model, stepper }, model, dt)
        }
        ModelKind::Full => {
            if cfg.model.potential_mode.is_some() || cfg.model.include_rot_loss {
                return Err(CliError::config(
                    "`potential_mode` and `include_rot_loss` apply to the effective model only",
                ));
            }
            if n.stepper.is_some() {
                return Err(CliError::config("the three-field model has a fixed integrator; remove `stepper`"));
            }
            let full = setup.full_model(cfg)?;
            let fc = setup.full_config(cfg);
            let reference = fc.effective_model(setup.si_extent).map_err(|e| CliError::config(format!("effective counterpart: {e}")))?;
            let dt = dt_req.unwrap_or_else(|| full.default_dt(&setup.grid));
            let bound = full.step_bound(&setup.grid);
            if dt > bound {
                return Err(CliError::config(format!("dt {dt:e} exceeds the three-field step bound {bound:e} (model units)")));
            }
            (Model::Full(full), reference, dt)
        }
    };
    if scenario == Scenario::RotateImage && reference.rotation == 0.0 {
        return Err(CliError::config("rotate-image needs a rotating medium"));
    }
    let psi0 = setup.initial_field(cfg)?;
    Ok(Plan {
        scenario,
        setup,
        model,
        reference,
        psi0,
        t_final,
        dt,
        sample_every: n.sample_every,
        leakage_every: n.leakage_every,
        leakage_tol: n.leakage_tol,
        snapshots: cfg.output.snapshots.then_some(cfg.output.snapshot_every),
    })
}

struct Run {
    trajectory: Trajectory,
    dt: f64,
    steps: usize,
}

impl Plan {
    /// Integrates, handing Ψ to `observer` at every sample.
    fn run<F>(&self, mut observer: F) -> CliResult<Run>
    where
        F: FnMut(usize, f64, &ComplexField2D) -> rotapol_core::Result<()>,
    {
        match &self.model {
            Model::Effective { model, stepper } => {
                let opts = EvolveOptions { dt: Some(self.dt), leakage_every: self.leakage_every, leakage_tol: self.leakage_tol };
                let ev = evolve_with(&self.psi0, model, self.t_final, *stepper, self.sample_every, &opts, |_, t, f| {
                    observer(0, t, f)
                })
                .numerics("effective evolution")?;
                Ok(Run { trajectory: ev.trajectory, dt: ev.dt, steps: ev.steps })
            }
            Model::Full(full) => {
                let s0 = adiabatic_init(&self.psi0, full).numerics("adiabatic initialisation")?;
                let opts = FullEvolveOptions { leakage_every: self.leakage_every, leakage_tol: self.leakage_tol };
                let ev = evolve_full_with(&s0, full, self.t_final, self.dt, self.sample_every, &opts, |_, t, s| {
                    observer(0, t, &s.psi)
                })
                .numerics("three-field evolution")?;
                Ok(Run { trajectory: ev.trajectory, dt: ev.dt, steps: ev.steps })
            }
        }
    }

    fn model_json(&self) -> Value {
        match &self.model {
            Model::Effective { model, stepper } => json!({
                "kind": "effective",
                "potential_mode": mode_name(model.mode),
                "stepper": stepper_name(*stepper),
                "coefficients": model,
            }),
            Model::Full(full) => json!({
                "kind": "full",
                "integrator": "etdrk4",
                "coefficients": full_model_json(full),
            }),
        }
    }

    fn metadata(&self, run: &Run) -> Value {
        json!({
            "scenario": self.scenario.name(),
            "model": self.model_json(),
            "grid": self.setup.grid_json(),
            "units": self.setup.units_json(),
            "derived": self.setup.derived,
            "t_final": self.t_final,
            "dt": run.dt,
            "steps": run.steps,
            "sample_every": self.sample_every,
            "samples": run.trajectory.len(),
            "final": run.trajectory.last(),
        })
    }

    pub fn execute(self, out: &mut ArtifactWriter, plot: bool) -> CliResult<Option<String>> {
        match self.scenario {
            Scenario::Cyclotron => self.cyclotron(out, plot),
            Scenario::RotateImage => self.rotate_image(out, plot),
            _ => self.evolve(out, plot),
        }
    }

    fn evolve(self, out: &mut ArtifactWriter, plot: bool) -> CliResult<Option<String>> {
        let mut index = 0usize;
        let mut names = Vec::new();
        let mut io_error = None;
        let run = self.run(|_, t, f| {
            if let Some(every) = self.snapshots {
                if index % every == 0 && io_error.is_none() {
                    let name = format!("snapshots/psi_{index:05}.slpf");
                    match out.snapshot(&name, f, t) {
                        Ok(()) => names.push(name),
                        Err(e) => io_error = Some(e),
                    }
                }
            }
            index += 1;
            Ok(())
        })?;
        if let Some(e) = io_error {
            return Err(e);
        }
        out.csv("trajectory.csv", &TRAJECTORY_HEADER, trajectory_rows(&run.trajectory))?;
        let mut meta = self.metadata(&run);
        meta["snapshots"] = json!(names);
        meta["norm_decay_rate"] = json!(norm_decay_rate(&run.trajectory).ok());
        out.json("evolve.json", &meta)?;
        gnuplot(
            out,
            plot,
            "set multiplot layout 1,2\nset size ratio -1\nplot 'trajectory.csv' using 3:4 with lines title 'centroid'\nset size noratio\nset logscale y\nplot 'trajectory.csv' using 1:2 with lines\nunset multiplot\n",
        )?;
        Ok(None)
    }

    /// Kinetic momentum ⟨p⟩ − A(⟨r⟩) of the initial state, with A = mΩ(y, −x).
    fn kinetic_momentum(&self) -> CliResult<(f64, f64)> {
        let f = &self.psi0;
        let n = f.norm_sqr();
        let mean_p = |axis| -> CliResult<f64> {
            let d = derivative(f, axis);
            let v = f.inner(&d).numerics("momentum")? * Complex64::new(0.0, -1.0);
            Ok(v.re / n)
        };
        let (px, py) = (mean_p(Axis::X)?, mean_p(Axis::Y)?);
        let (x, y) = centroid(f).numerics("centroid")?;
        let mw = self.reference.mass() * self.reference.rotation;
        Ok((px - mw * y, py + mw * x))
    }

    fn cyclotron(self, out: &mut ArtifactWriter, plot: bool) -> CliResult<Option<String>> {
        let run = self.run(|_, _, _| Ok(()))?;
        out.csv("trajectory.csv", &TRAJECTORY_HEADER, trajectory_rows(&run.trajectory))?;
        let fit = fit_cyclotron(&run.trajectory).numerics("orbit fit")?;
        let (pi_x, pi_y) = self.kinetic_momentum()?;
        let omega_c = self.reference.omega_c();
        let mass = self.reference.mass();
        let radius = pi_x.hypot(pi_y) / (mass * omega_c.abs());
        let period = TAU / omega_c.abs();
        let mut meta = self.metadata(&run);
        meta["fit"] = json!(fit);
        meta["fit_period"] = json!(fit.period());
        meta["expected"] = json!({
            "kinetic_momentum": [pi_x, pi_y],
            "radius": radius,
            "period": period,
            "angular_frequency": omega_c,
        });
        meta["relative_error"] = json!({
            "radius": (fit.radius - radius).abs() / radius,
            "period": (fit.period() - period).abs() / period,
            "residual_over_radius": fit.rms_residual / fit.radius,
        });
        out.json("orbit.json", &meta)?;
        gnuplot(out, plot, "set size ratio -1\nplot 'trajectory.csv' using 3:4 with linespoints title 'centroid'\n")?;
        Ok(Some(format!(
            "radius {} (expected {}), period {} (expected {})\n",
            fit.radius,
            radius,
            fit.period(),
            period
        )))
    }

    /// Free evolution of Ψ₀ to `t`, one exact kinetic step.
    fn free_evolved(&self, t: f64) -> rotapol_core::Result<ComplexField2D> {
        let mut free = EffectiveModel::free();
        free.kinetic = self.reference.kinetic;
        let opts = EvolveOptions { dt: Some(t), leakage_every: 1, leakage_tol: self.leakage_tol };
        Ok(evolve(&self.psi0, &free, t, Stepper::Strang, 1, &opts)?.final_field)
    }

    fn rotate_image(self, out: &mut ArtifactWriter, plot: bool) -> CliResult<Option<String>> {
        let order = symmetry_order(&self.psi0).numerics("symmetry order")?;
        let period = TAU / order as f64;
        let omega = self.reference.rotation;
        let rigid = matches!(&self.model, Model::Effective { model, .. } if model.quadratic_coefficient() == 0.0 && model.offset == 0.0 && !model.has_loss());
        let mut rows: Vec<(f64, f64, Option<f64>)> = Vec::new();
        let mut prev = 0.0;
        let run = self.run(|_, t, f| {
            if t == 0.0 {
                return Ok(());
            }
            let raw = image_rotation_angle(f, &self.psi0)?;
            let angle = raw + period * ((prev - raw) / period).round();
            prev = angle;
            let overlap = if rigid {
                let turned = rotate_field_with_tolerance(&self.free_evolved(t)?, omega * t, self.leakage_tol)?;
                Some(fidelity(f, &turned)?)
            } else {
                None
            };
            rows.push((t, angle, overlap));
            Ok(())
        })?;
        let times: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let angles: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let line = linear_fit(&times, &angles).numerics("angle fit")?;
        out.csv(
            "rotation.csv",
            &["time", "angle", "expected_angle", "rigid_overlap"],
            rows.iter().map(|&(t, a, o)| vec![num(t), num(a), num(omega * t), o.map(num).unwrap_or_default()]),
        )?;
        let min_overlap = rows.iter().filter_map(|r| r.2).reduce(f64::min);
        let mut meta = self.metadata(&run);
        meta["symmetry_order"] = json!(order);
        meta["fit"] = json!(line);
        meta["expected_slope"] = json!(omega);
        meta["slope_relative_error"] = json!((line.slope - omega).abs() / omega.abs());
        meta["min_rigid_overlap"] = json!(min_overlap);
        out.json("rotation.json", &meta)?;
        gnuplot(
            out,
            plot,
            "set xlabel 'time'\nset ylabel 'angle [rad]'\nplot 'rotation.csv' using 1:2 with points pt 7, '' using 1:3 with lines\n",
        )?;
        Ok(Some(format!("slope {} (expected {}), min overlap {:?}\n", line.slope, omega, min_overlap)))
    }
}
