//! Artifact writing: atomic files, CSV with round-trip floats, SLPF
//! snapshots and the hashed manifest.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rotapol_core::grid::{decode_snapshot, encode_snapshot};
use rotapol_core::{ComplexField2D, Trajectory};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const MANIFEST_NAME: &str = "manifest.json";
pub const TRAJECTORY_HEADER: [&str; 7] = ["time", "norm_sqr", "x", "y", "lz", "lz2", "energy"];

/// 17 significant digits, enough to round-trip any f64.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Writes `bytes` to a temporary file next to `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn csv_bytes<I>(header: &[&str], rows: I) -> Vec<u8>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for row in rows {
        w.write_record(&row).expect("in-memory csv");
    }
    w.into_inner().expect("in-memory csv")
}

pub fn trajectory_rows(traj: &Trajectory) -> Vec<Vec<String>> {
    traj.samples
        .iter()
        .map(|s| vec![num(s.time), num(s.norm_sqr), num(s.x), num(s.y), num(s.lz), num(s.lz2), num(s.energy)])
        .collect()
}

pub fn save_snapshot(path: &Path, field: &ComplexField2D, time: f64) -> CliResult<()> {
    write_atomic(path, &encode_snapshot(field, time))
}

pub fn load_snapshot(path: &Path) -> CliResult<(ComplexField2D, f64)> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    decode_snapshot(&bytes).map_err(|e| {
        CliError::io(path, std::io::Error::new(std::io::ErrorKind::InvalidData, e.to_string()))
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub scenario: String,
    pub config_sha256: String,
    /// Seconds since the Unix epoch; the only time-dependent field of a run.
    pub created_unix: u64,
    pub status: String,
    pub files: Vec<ManifestEntry>,
}

/// Collects the artifacts of one run inside an output directory.
#[derive(Debug)]
pub struct ArtifactWriter {
    dir: PathBuf,
    entries: Vec<ManifestEntry>,
    pub csv: bool,
    pub json: bool,
}

impl ArtifactWriter {
    pub fn create(dir: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), entries: Vec::new(), csv: true, json: true })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> CliResult<()> {
        write_atomic(&self.dir.join(rel), bytes)?;
        self.entries.retain(|e| e.path != rel);
        self.entries.push(ManifestEntry { path: rel.to_string(), bytes: bytes.len() as u64, sha256: sha256_hex(bytes) });
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, rel: &str, value: &T) -> CliResult<()> {
        if !self.json {
            return Ok(());
        }
        let mut bytes = serde_json::to_vec_pretty(value).expect("artifact serializes");
        bytes.push(b'\n');
        self.write(rel, &bytes)
    }

    pub fn csv<I>(&mut self, rel: &str, header: &[&str], rows: I) -> CliResult<()>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        if !self.csv {
            return Ok(());
        }
        self.write(rel, &csv_bytes(header, rows))
    }

    pub fn text(&mut self, rel: &str, text: &str) -> CliResult<()> {
        self.write(rel, text.as_bytes())
    }

    pub fn snapshot(&mut self, rel: &str, field: &ComplexField2D, time: f64) -> CliResult<()> {
        self.write(rel, &encode_snapshot(field, time))
    }

    pub fn finish(mut self, scenario: &str, config_sha256: &str, status: &str) -> CliResult<Manifest> {
        self.entries.sort_by(|a, b| a.path.cmp(&b.path));
        let created_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            scenario: scenario.to_string(),
            config_sha256: config_sha256.to_string(),
            created_unix,
            status: status.to_string(),
            files: self.entries,
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
        bytes.push(b'\n');
        write_atomic(&self.dir.join(MANIFEST_NAME), &bytes)?;
        Ok(manifest)
    }
}
