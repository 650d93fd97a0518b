//! CSV tables and run manifests.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use disac_core::archive::hex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{DisacError, Result};

/// In-memory CSV. Column names carry units as suffixes (`_db`, `_deg`,
/// `_nats`, `_w`, `_m2`); columns without a suffix are dimensionless.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &[&'static str]) -> Self {
        Self {
            name: name.into(),
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len(), "row width for {}", self.name);
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| DisacError::Csv(e.into_error().into()))
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| *h == name)
    }
}

/// Shortest round-trip formatting, so identical values give identical bytes.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x}")
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub file: String,
    pub rows: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub kind: String,
    pub spec_sha256: String,
    /// Spec text as run, so the manifest alone reproduces the outputs.
    pub spec: String,
    pub spec_dir: PathBuf,
    /// Hash over the per-point configuration hashes in sweep order.
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub points: usize,
    pub full_scale: bool,
    pub workers: usize,
    pub revision: String,
    pub wall_time_s: f64,
    pub infeasible_points: usize,
    pub solver_trouble_points: usize,
    pub outputs: Vec<OutputFile>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| DisacError::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

/// `git describe` of the working tree when available, the crate version
/// otherwise.
pub fn revision() -> String {
    let git = Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output();
    match git {
        Ok(o) if o.status.success() => {
            format!("{} ({})", String::from_utf8_lossy(&o.stdout).trim(), env!("CARGO_PKG_VERSION"))
        }
        _ => format!("v{}", env!("CARGO_PKG_VERSION")),
    }
}

pub fn ensure_writable(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| DisacError::io(dir, e))?;
    let probe = dir.join(".disac-write-probe");
    fs::write(&probe, b"").map_err(|e| DisacError::io(&probe, e))?;
    fs::remove_file(&probe).map_err(|e| DisacError::io(&probe, e))
}

pub fn write_tables(dir: &Path, tables: &[Table]) -> Result<Vec<OutputFile>> {
    ensure_writable(dir)?;
    tables
        .iter()
        .map(|t| {
            let bytes = t.to_bytes()?;
            let path = dir.join(t.file_name());
            fs::write(&path, &bytes).map_err(|e| DisacError::io(&path, e))?;
            Ok(OutputFile {
                file: t.file_name(),
                rows: t.rows.len(),
                sha256: sha256_hex(&bytes),
            })
        })
        .collect()
}

pub fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<PathBuf> {
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(manifest)?;
    fs::write(&path, text).map_err(|e| DisacError::io(&path, e))?;
    Ok(path)
}
