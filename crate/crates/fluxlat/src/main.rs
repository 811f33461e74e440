use clap::{Parser, Subcommand};
use fluxlat::{compare, prepare, read_config, run_config, seed_from_env, CliError, RunOptions};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "fluxlat", version, about = "Diffusion of a lattice particle in a random dynamic environment")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the mode named in the configuration.
    Run {
        config: PathBuf,
        /// Worker threads (default: available parallelism).
        #[arg(long)]
        workers: Option<usize>,
        /// Output directory (overrides output.dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the quantities of two result files.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        tol: f64,
        /// Quantity of A to compare (default: all shared names).
        #[arg(long, requires = "key_b")]
        key_a: Option<String>,
        /// Quantity of B matched against --key-a.
        #[arg(long, requires = "key_a")]
        key_b: Option<String>,
    },
    /// Validate a configuration and print it with every default filled in.
    Validate { config: PathBuf },
}

fn load_json(path: &Path) -> Result<serde_json::Value, CliError> {
    let bytes = read_config(path)?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::validation(path.display().to_string(), e))
}

fn main_inner(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, workers, out } => {
            let bytes = read_config(&config)?;
            let opts = RunOptions {
                workers,
                out,
                seed: seed_from_env()?,
            };
            let report = run_config(&bytes, &opts)?;
            let summary = json!({
                "mode": report.manifest.mode,
                "dir": report.dir.display().to_string(),
                "files": report.manifest.files,
                "wall_clock_seconds": report.manifest.wall_clock_seconds,
                "summary": report.outcome.summary,
                "violations": report.outcome.violations,
            });
            println!("{}", serde_json::to_string_pretty(&summary).unwrap());
            if !report.outcome.violations.is_empty() {
                return Err(CliError::Invariant(report.outcome.violations.join("; ")));
            }
            Ok(())
        }
        Command::Compare { a, b, tol, key_a, key_b } => {
            let (da, db) = (load_json(&a)?, load_json(&b)?);
            let keys = key_a.as_deref().zip(key_b.as_deref());
            let rep = compare(&da, &db, tol, keys)?;
            println!("{}", serde_json::to_string_pretty(&rep).unwrap());
            if !rep.pass {
                let worst = rep.diffs.iter().map(|d| d.rel_diff).fold(0.0, f64::max);
                return Err(CliError::Invariant(format!("difference {worst:e} above tolerance {tol:e}")));
            }
            Ok(())
        }
        Command::Validate { config } => {
            let bytes = read_config(&config)?;
            let (p, stamp) = prepare(&bytes, seed_from_env()?)?;
            let doc = json!({ "valid": true, "manifest": stamp, "config": p.config });
            println!("{}", serde_json::to_string_pretty(&doc).unwrap());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
