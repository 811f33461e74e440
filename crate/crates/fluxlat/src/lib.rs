//! Command-line harness: reads a JSON run configuration, validates it,
//! dispatches to the solver crates and writes results with a manifest.
//!
//! Exit codes: 0 success, 2 invalid input, 3 invariant violated, 4 budget abort.

pub mod compare;
pub mod config;
pub mod error;
pub mod modes;
pub mod output;

pub use compare::{compare, CompareReport, QuantityDiff};
pub use config::{DSource, Method, Mode, Prepared, RouteName, RunConfig};
pub use error::CliError;
pub use modes::{execute, extrapolate_inverse_square, Outcome};
pub use output::{sha256_hex, write_atomic, Manifest, Outputs, Stamp, BUILD_ID, VERSION};

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

pub const SEED_ENV: &str = "FLUXLAT_SEED";

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; `None` takes the available parallelism.
    pub workers: Option<usize>,
    /// Overrides `output.dir`.
    pub out: Option<PathBuf>,
    /// Overrides `seed.master` (FLUXLAT_SEED).
    pub seed: Option<u64>,
}

pub struct RunReport {
    pub dir: PathBuf,
    pub outcome: Outcome,
    pub manifest: Manifest,
}

/// FLUXLAT_SEED, if set.
pub fn seed_from_env() -> Result<Option<u64>, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::validation(SEED_ENV, format!("{s:?} is not an unsigned 64-bit integer"))),
        Err(_) => Ok(None),
    }
}

pub fn read_config(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::io(path, e))
}

/// Parses, applies the seed override and materializes.
pub fn prepare(bytes: &[u8], seed: Option<u64>) -> Result<(Prepared, Stamp), CliError> {
    let mut cfg = RunConfig::from_json(bytes)?;
    if let Some(s) = seed {
        cfg.seed.master = s;
    }
    let prepared = cfg.materialize()?;
    let stamp = Stamp {
        config_hash: sha256_hex(bytes),
        master_seed: prepared.config.seed.master,
        seed_source: if seed.is_some() { "FLUXLAT_SEED" } else { "config" },
        version: VERSION,
        build: BUILD_ID,
    };
    Ok((prepared, stamp))
}

pub fn worker_pool(workers: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    let n = match workers {
        Some(0) => return Err(CliError::validation("--workers", "need at least one worker")),
        Some(n) => n,
        None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| CliError::Numerical(format!("worker pool: {e}")))
}

/// Runs a configuration end to end. Result files and manifest are written
/// even when hard invariants fail; the caller maps `violations` to exit 3.
pub fn run_config(bytes: &[u8], opts: &RunOptions) -> Result<RunReport, CliError> {
    let (prepared, stamp) = prepare(bytes, opts.seed)?;
    let pool = worker_pool(opts.workers)?;
    let dir = opts.out.clone().unwrap_or_else(|| PathBuf::from(&prepared.config.output.dir));
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let clock = Instant::now();
    let outcome = pool.install(|| execute(&prepared, &stamp))?;
    outcome.outputs.commit(&dir)?;
    let manifest = Manifest {
        stamp: stamp.clone(),
        mode: prepared.run().mode.name(),
        workers: pool.current_num_threads(),
        started_unix: started,
        wall_clock_seconds: clock.elapsed().as_secs_f64(),
        tolerances: output::tolerances(),
        files: outcome.outputs.files.iter().map(|(n, _)| n.clone()).collect(),
        config: serde_json::to_value(&prepared.config).expect("config serializes"),
    };
    let mut m = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    m.push('\n');
    write_atomic(&dir.join("manifest.json"), m.as_bytes())?;
    Ok(RunReport { dir, outcome, manifest })
}
