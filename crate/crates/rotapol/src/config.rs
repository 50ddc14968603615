//! JSON scenario configuration.
//!
//! Every block rejects unknown keys. `preset` fills `medium` and `geometry`
//! with a named reference set; keys given explicitly in those blocks
//! override the preset one by one. See `docs/config-schema.md`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rotapol_core::effective::{PotentialMode, Stepper};
use rotapol_core::{MediumParams, RotationGeometry};
use serde::Deserialize;
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, clap::ValueEnum)]
pub enum Scenario {
    Derive,
    Landau,
    Evolve,
    Cyclotron,
    RotateImage,
    Validate,
    Scan,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::Derive,
        Scenario::Landau,
        Scenario::Evolve,
        Scenario::Cyclotron,
        Scenario::RotateImage,
        Scenario::Validate,
        Scenario::Scan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Derive => "derive",
            Scenario::Landau => "landau",
            Scenario::Evolve => "evolve",
            Scenario::Cyclotron => "cyclotron",
            Scenario::RotateImage => "rotate-image",
            Scenario::Validate => "validate",
            Scenario::Scan => "scan",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| CliError::config(format!("unknown scenario `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    P0,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Optional cross-check against the scenario named on the command line.
    #[serde(default)]
    pub scenario: Option<String>,
    #[serde(default)]
    pub preset: Option<Preset>,
    #[serde(default)]
    pub medium: Option<MediumParams>,
    #[serde(default)]
    pub geometry: Option<RotationGeometry>,
    #[serde(default)]
    pub model: ModelBlock,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub initial: Option<InitialState>,
    #[serde(default)]
    pub analysis: Analysis,
    #[serde(default)]
    pub spectrum: SpectrumBlock,
    #[serde(default)]
    pub validate: Option<ValidateBlock>,
    #[serde(default)]
    pub sweep: Option<SweepBlock>,
    #[serde(default)]
    pub output: OutputBlock,
    /// Directory of the config file; relative snapshot paths resolve against it.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    #[default]
    Effective,
    Full,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    #[serde(default)]
    pub kind: ModelKind,
    /// Effective model only; defaults to `compensated`.
    #[serde(default)]
    pub potential_mode: Option<PotentialMode>,
    #[serde(default)]
    pub include_rot_loss: bool,
    #[serde(default = "yes")]
    pub rot_loss_mass_correction: bool,
    /// Longitudinal wavenumber [1/m].
    #[serde(default)]
    pub kz: f64,
    /// Three-field model only.
    #[serde(default = "yes")]
    pub use_gn_only: bool,
}

impl Default for ModelBlock {
    fn default() -> Self {
        Self {
            kind: ModelKind::Effective,
            potential_mode: None,
            include_rot_loss: false,
            rot_loss_mass_correction: true,
            kz: 0.0,
            use_gn_only: true,
        }
    }
}

impl ModelBlock {
    pub fn potential_mode(&self) -> PotentialMode {
        self.potential_mode.unwrap_or(PotentialMode::Compensated)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Pair<T> {
    Same(T),
    Each([T; 2]),
}

impl<T: Copy> Pair<T> {
    pub fn get(self) -> (T, T) {
        match self {
            Pair::Same(v) => (v, v),
            Pair::Each([a, b]) => (a, b),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitSystem {
    /// ħ = m⊥ = ω_c = 1; lengths in L_mag, times in 1/ω_c.
    #[default]
    Model,
    Si,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    /// Points per axis, one number or `[nx, ny]`.
    #[serde(default)]
    pub grid: Option<Pair<usize>>,
    /// Box size, one number or `[x, y]`.
    #[serde(default)]
    pub extent: Option<Pair<f64>>,
    #[serde(default)]
    pub units: UnitSystem,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub t_final: Option<f64>,
    #[serde(default)]
    pub stepper: Option<Stepper>,
    #[serde(default = "default_sample_every")]
    pub sample_every: usize,
    #[serde(default = "default_leakage_every")]
    pub leakage_every: usize,
    #[serde(default = "default_leakage_tol")]
    pub leakage_tol: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            grid: None,
            extent: None,
            units: UnitSystem::Model,
            dt: None,
            t_final: None,
            stepper: None,
            sample_every: default_sample_every(),
            leakage_every: default_leakage_every(),
            leakage_tol: default_leakage_tol(),
            seed: default_seed(),
        }
    }
}

pub const DEFAULT_GRID: usize = 128;
pub const DEFAULT_EXTENT: f64 = 24.0;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    Gaussian {
        #[serde(default)]
        center: [f64; 2],
        width: f64,
        #[serde(default)]
        momentum: [f64; 2],
    },
    Vortex {
        m: i32,
        width: f64,
    },
    /// Lowest-Landau-level state with angular momentum `m` (needs rotation).
    LandauVortex {
        m: i32,
    },
    HermiteGaussian {
        i: u32,
        j: u32,
        width: f64,
    },
    Snapshot {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Analysis {
    #[serde(default)]
    pub polariton_number: Option<f64>,
    /// Beam offset ρ from the rotation axis [m].
    #[serde(default)]
    pub beam_offset: Option<f64>,
    /// Propagation length for the deflection angle [m]; defaults to the medium length.
    #[serde(default)]
    pub propagation_length: Option<f64>,
    #[serde(default = "default_margin")]
    pub feasibility_margin: f64,
}

impl Default for Analysis {
    fn default() -> Self {
        Self { polariton_number: None, beam_offset: None, propagation_length: None, feasibility_margin: default_margin() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumBlock {
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_cluster_tol")]
    pub cluster_tol: f64,
    #[serde(default = "default_filter_degree")]
    pub filter_degree: usize,
    #[serde(default = "default_eigen_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iterations")]
    pub max_iterations: usize,
    #[serde(default)]
    pub guard: Option<usize>,
}

impl Default for SpectrumBlock {
    fn default() -> Self {
        Self {
            k: default_k(),
            cluster_tol: default_cluster_tol(),
            filter_degree: default_filter_degree(),
            tol: default_eigen_tol(),
            max_iterations: default_max_iterations(),
            guard: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateBlock {
    /// Multipliers of g²n; g√n and both Rabi frequencies scale by the square root so θ and φ stay fixed.
    pub g2n_factors: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepParam {
    pub key: String,
    #[serde(default)]
    pub values: Option<Vec<f64>>,
    #[serde(default)]
    pub start: Option<f64>,
    #[serde(default)]
    pub stop: Option<f64>,
    #[serde(default)]
    pub points: Option<usize>,
    #[serde(default)]
    pub spacing: Spacing,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub parameters: Vec<SweepParam>,
    #[serde(default)]
    pub columns: Option<Vec<String>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default)]
    pub directory: Option<PathBuf>,
    #[serde(default = "yes")]
    pub csv: bool,
    #[serde(default = "yes")]
    pub json: bool,
    #[serde(default)]
    pub snapshots: bool,
    /// Write a snapshot at every n-th trajectory sample.
    #[serde(default = "one")]
    pub snapshot_every: usize,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self { directory: None, csv: true, json: true, snapshots: false, snapshot_every: 1 }
    }
}

fn yes() -> bool {
    true
}
fn one() -> usize {
    1
}
fn default_sample_every() -> usize {
    20
}
fn default_leakage_every() -> usize {
    rotapol_core::effective::DEFAULT_LEAKAGE_EVERY
}
fn default_leakage_tol() -> f64 {
    1e-8
}
fn default_seed() -> u64 {
    1
}
fn default_margin() -> f64 {
    rotapol_core::params::DEFAULT_FEASIBILITY_MARGIN
}
fn default_k() -> usize {
    48
}
fn default_cluster_tol() -> f64 {
    rotapol_core::spectra::DEFAULT_CLUSTER_TOL
}
fn default_filter_degree() -> usize {
    40
}
fn default_eigen_tol() -> f64 {
    1e-9
}
fn default_max_iterations() -> usize {
    200
}

impl ScenarioConfig {
    /// Parses a config document, applying the preset before schema checks.
    pub fn from_json(text: &str) -> CliResult<Self> {
        let mut value: Value =
            serde_json::from_str(text).map_err(|e| CliError::config(format!("malformed JSON: {e}")))?;
        apply_preset(&mut value)?;
        let cfg: ScenarioConfig =
            serde_json::from_value(value).map_err(|e| CliError::config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<(Self, Vec<u8>)> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        let text = std::str::from_utf8(&bytes).map_err(|_| CliError::config("config is not valid UTF-8"))?;
        let mut cfg = Self::from_json(text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((cfg, bytes))
    }

    pub fn check_scenario(&self, scenario: Scenario) -> CliResult<()> {
        match &self.scenario {
            Some(name) if name.parse::<Scenario>()? != scenario => Err(CliError::config(format!(
                "config is for scenario `{name}` but `{scenario}` was requested"
            ))),
            _ => Ok(()),
        }
    }

    pub fn medium_geometry(&self) -> CliResult<(MediumParams, RotationGeometry)> {
        match (self.medium, self.geometry) {
            (Some(m), Some(g)) => Ok((m, g)),
            _ => Err(CliError::config("`medium` and `geometry` blocks (or a `preset`) are required")),
        }
    }

    pub fn initial(&self) -> CliResult<&InitialState> {
        self.initial.as_ref().ok_or_else(|| CliError::config("`initial` state is required"))
    }

    pub fn t_final(&self) -> CliResult<f64> {
        let t = self.numerics.t_final.ok_or_else(|| CliError::config("`numerics.t_final` is required"))?;
        if t > 0.0 && t.is_finite() {
            Ok(t)
        } else {
            Err(CliError::config("`numerics.t_final` must be positive"))
        }
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }
}

fn apply_preset(value: &mut Value) -> CliResult<()> {
    let Some(obj) = value.as_object_mut() else {
        return Err(CliError::config("config must be a JSON object"));
    };
    let Some(preset) = obj.get("preset") else {
        return Ok(());
    };
    let preset: Preset =
        serde_json::from_value(preset.clone()).map_err(|e| CliError::config(format!("preset: {e}")))?;
    let (medium, geometry) = match preset {
        Preset::P0 => (MediumParams::reference_p0(), RotationGeometry::reference_p0()),
    };
    overlay(obj, "medium", serde_json::to_value(medium).expect("medium serializes"))?;
    overlay(obj, "geometry", serde_json::to_value(geometry).expect("geometry serializes"))?;
    Ok(())
}

fn overlay(obj: &mut Map<String, Value>, key: &str, base: Value) -> CliResult<()> {
    let mut merged = base;
    match obj.remove(key) {
        None => {}
        Some(Value::Object(over)) => {
            let target = merged.as_object_mut().expect("preset block is an object");
            for (k, v) in over {
                target.insert(k, v);
            }
        }
        Some(_) => return Err(CliError::config(format!("`{key}` must be an object"))),
    }
    obj.insert(key.to_string(), merged);
    Ok(())
}
