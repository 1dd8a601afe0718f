//! Command-line experiment driver.

pub mod config;
pub mod experiments;
pub mod table;

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;

pub use config::{Experiment, ExperimentConfig};
pub use experiments::{execute, Artifact};

use crate::error::{Error, Result};

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "LANDMOD_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "landmod-output";
pub const MANIFEST: &str = "manifest.toml";

#[derive(Debug, Parser)]
#[command(name = "landmod", version, about = "Landscape-modified Metropolis-Hastings and annealing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Overrides the config and the environment.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Check a config without running it.
    Validate { config: PathBuf },
    /// Print the available experiments.
    ListExperiments,
}

/// Process exit code for an error: 1 for I/O, 3 for numerical failures, 2 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => 1,
        Error::Numerical { .. } | Error::Range(_) | Error::Structure(_) => 3,
        _ => 2,
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    experiment: &'a str,
    version: &'a str,
    wall_time_seconds: f64,
    files: Vec<&'a str>,
    config: &'a ExperimentConfig,
}

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

/// Output directory: explicit flag, then the config, then the environment.
pub fn output_dir(cfg: &ExperimentConfig, flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| cfg.output_dir.clone())
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
}

/// Runs the config at `path` and writes CSVs plus a manifest. Nothing is
/// written unless every computation succeeds.
pub fn run(path: &Path, flag: Option<&Path>) -> Result<PathBuf> {
    let cfg = ExperimentConfig::load(path)?;
    let out = output_dir(&cfg, flag);
    let start = Instant::now();
    let artifacts = execute(&cfg, &base_dir(path))?;
    let manifest = Manifest {
        experiment: cfg.experiment.name(),
        version: env!("CARGO_PKG_VERSION"),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        files: artifacts.iter().map(|a| a.name.as_str()).collect(),
        config: &cfg,
    };
    let manifest = toml::to_string(&manifest).map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    std::fs::create_dir_all(&out)?;
    for a in &artifacts {
        std::fs::write(out.join(&a.name), &a.bytes)?;
    }
    std::fs::write(out.join(MANIFEST), manifest)?;
    Ok(out)
}

/// Dry run: parse, range-check and resolve the inputs. Returns the report text.
pub fn validate(path: &Path) -> Result<String> {
    let cfg = ExperimentConfig::load(path)?;
    let mut report = String::from("ok\n");
    match cfg.experiment {
        Experiment::SpectralSlope | Experiment::AnnealCompare | Experiment::MhSample => {
            let land = cfg.landscape.resolve(&base_dir(path))?;
            let (c, moved) = experiments::clamped_threshold(&cfg, &land);
            if moved && cfg.experiment == Experiment::SpectralSlope {
                report.push_str(&format!(
                    "warning: policy.c outside [{}, {}]; clamped to {c}\n",
                    land.h_min(),
                    land.h_max()
                ));
            }
            report.push_str(&format!("# landscape: {} states, energies in [{}, {}]\n", land.n(), land.h_min(), land.h_max()));
        }
        _ => {}
    }
    report.push_str(&cfg.to_toml());
    Ok(report)
}

pub fn list_experiments() -> String {
    Experiment::ALL
        .iter()
        .map(|e| format!("{:<16}{}\n", e.name(), e.summary()))
        .collect()
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Run { config, output_dir } => run(&config, output_dir.as_deref()).map(|out| {
            println!("wrote {}", out.display());
        }),
        Command::Validate { config } => validate(&config).map(|r| print!("{r}")),
        Command::ListExperiments => {
            print!("{}", list_experiments());
            Ok(())
        }
    };
    let _ = std::io::stdout().flush();
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
