//! Scenario runner for the rotating stationary-light polariton toolkit.
//!
//! A run reads a JSON [`config::ScenarioConfig`], validates it completely,
//! executes one [`config::Scenario`] and leaves its artifacts plus a
//! `manifest.json` (sha256 of every file) in the output directory.
//! Artifacts are deterministic; only the manifest carries a timestamp.

pub mod config;
pub mod error;
pub mod io;
pub mod scenarios;

use std::path::{Path, PathBuf};

use serde_json::json;

pub use config::{Scenario, ScenarioConfig};
pub use error::{CliError, CliResult};
pub use io::Manifest;

use io::{sha256_hex, ArtifactWriter};

#[derive(Debug)]
pub struct RunOutcome {
    pub manifest: Manifest,
    pub out_dir: PathBuf,
    /// Human-readable summary for standard output.
    pub stdout: Option<String>,
}

pub const FAILURE_NAME: &str = "failure.json";

/// Output directory: explicit argument, then the config's `output.directory`
/// (relative to the config file), then `rotapol-out/<scenario>`.
pub fn output_dir(scenario: Scenario, cfg: &ScenarioConfig, out: Option<&Path>) -> PathBuf {
    match (out, &cfg.output.directory) {
        (Some(dir), _) => dir.to_path_buf(),
        (None, Some(dir)) => cfg.resolve(dir),
        (None, None) => PathBuf::from("rotapol-out").join(scenario.name()),
    }
}

pub fn run(scenario: Scenario, config_path: &Path, out: Option<&Path>, gnuplot: bool) -> CliResult<RunOutcome> {
    let (cfg, bytes) = ScenarioConfig::load(config_path)?;
    run_config(scenario, &cfg, &sha256_hex(&bytes), out, gnuplot)
}

/// Runs an already parsed config; `config_sha256` is recorded in the manifest.
pub fn run_config(
    scenario: Scenario,
    cfg: &ScenarioConfig,
    config_sha256: &str,
    out: Option<&Path>,
    gnuplot: bool,
) -> CliResult<RunOutcome> {
    let plan = scenarios::prepare(scenario, cfg)?;
    let out_dir = output_dir(scenario, cfg, out);
    let mut writer = ArtifactWriter::create(&out_dir)?;
    writer.csv = cfg.output.csv;
    writer.json = cfg.output.json;
    match plan.execute(&mut writer, gnuplot) {
        Ok(stdout) => {
            let manifest = writer.finish(scenario.name(), config_sha256, "ok")?;
            Ok(RunOutcome { manifest, out_dir, stdout })
        }
        Err(CliError::Numerics { stage, source }) => {
            let diag = json!({
                "scenario": scenario.name(),
                "stage": stage,
                "error": source.to_string(),
                "detail": format!("{source:?}"),
            });
            let mut bytes = serde_json::to_vec_pretty(&diag).expect("diagnostic serializes");
            bytes.push(b'\n');
            writer.write(FAILURE_NAME, &bytes)?;
            writer.finish(scenario.name(), config_sha256, "numerics_failure")?;
            Err(CliError::Numerics { stage, source })
        }
        Err(e) => Err(e),
    }
}

/// Sizes the global worker pool; `None` leaves the rayon default.
pub fn configure_threads(threads: Option<usize>) -> CliResult<()> {
    match threads {
        None => Ok(()),
        Some(0) => Err(CliError::config("thread count must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::config(format!("cannot size the worker pool: {e}"))),
    }
}
