use crate::error::CliError;
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const BUILD_ID: &str = env!("FLUXLAT_BUILD_ID");

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Tolerances in force, by module.
pub fn tolerances() -> serde_json::Value {
    json!({
        "model": { "hermiticity": 1e-14, "normalization": 1e-12 },
        "noise": { "conservation": 1e-12, "mixing_violation": 1e-10, "inverse_residual": 1e-10, "gap_slack": 1e-9 },
        "trajectory": { "unitarity": 1e-10, "apriori_margin": 0.0, "curvature_sigma": 3.0, "finite_size_fraction": 0.25 },
        "augmented": {
            "range_threshold": fluxlat_augmented::RANGE_THRESHOLD,
            "solve_residual": fluxlat_augmented::SOLVE_TOLERANCE,
            "imag_d": 1e-8,
            "accretivity": 1e-10,
            "fiber_consistency": 1e-8,
            "schur_vs_tauberian": 1e-6,
            "small_g_stabilization": fluxlat_augmented::STABILIZATION_TOLERANCE
        },
        "harness": { "pillet_sigma": 4.0, "slope_relative": 0.10, "slope_sigma": 3.0 }
    })
}

/// Deterministic header carried by every result file.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Stamp {
    pub config_hash: String,
    pub master_seed: u64,
    pub seed_source: &'static str,
    pub version: &'static str,
    pub build: &'static str,
}

impl Stamp {
    pub fn csv_header(&self) -> String {
        format!(
            "# config_hash={} seed={} version={} build={}\n",
            self.config_hash, self.master_seed, self.version, self.build
        )
    }
}

/// Full manifest written as manifest.json; includes the run-dependent fields.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    #[serde(flatten)]
    pub stamp: Stamp,
    pub mode: &'static str,
    pub workers: usize,
    pub started_unix: u64,
    pub wall_clock_seconds: f64,
    pub tolerances: serde_json::Value,
    pub files: Vec<String>,
    pub config: serde_json::Value,
}

/// Writes to a sibling temporary file, syncs, then renames over the target.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let name = path.file_name().and_then(|s| s.to_str()).unwrap_or("out");
    let tmp: PathBuf = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let res = (|| -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = res {
        let _ = fs::remove_file(&tmp);
        return Err(CliError::io(path, e));
    }
    Ok(())
}

/// Result files collected in memory and committed together at the end.
#[derive(Debug, Default)]
pub struct Outputs {
    pub files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn json(&mut self, name: &str, value: &serde_json::Value) {
        let mut s = serde_json::to_string_pretty(value).expect("json values serialize");
        s.push('\n');
        self.files.push((name.to_string(), s.into_bytes()));
    }

    pub fn csv(&mut self, name: &str, stamp: &Stamp, header: &[String], rows: &[Vec<String>]) {
        let mut s = stamp.csv_header();
        s.push_str(&header.join(","));
        s.push('\n');
        for r in rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        self.files.push((name.to_string(), s.into_bytes()));
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_slice())
    }

    pub fn commit(&self, dir: &Path) -> Result<(), CliError> {
        for (name, bytes) in &self.files {
            write_atomic(&dir.join(name), bytes)?;
        }
        Ok(())
    }
}

/// Shortest round-trip representation.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}
