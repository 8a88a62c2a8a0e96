//! Command-line experiment orchestration: seeded reproducible runs with
//! structured JSON/CSV outputs, validation, and reproducibility checks.

mod check;
mod config;
mod runner;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use config::ExperimentConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] orbitstat::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// 2 = validation, 3 = undersampled / insufficient data, 1 = environment.
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) => match e {
                orbitstat::Error::Undersampled(_) | orbitstat::Error::InsufficientData(_) => 3,
                _ => 2,
            },
            _ => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Core(e) => match e {
                orbitstat::Error::PhaseSpaceMismatch(_) => "phase-space-mismatch",
                orbitstat::Error::Domain(_) => "domain",
                orbitstat::Error::Parameter(_) => "parameter",
                orbitstat::Error::Range(_) => "range",
                orbitstat::Error::Geometry(_) => "geometry",
                orbitstat::Error::InsufficientData(_) => "insufficient-data",
                orbitstat::Error::Undersampled(_) => "undersampled",
            },
            CliError::Io(_) => "io",
            CliError::Json(_) => "json",
            CliError::Csv(_) => "csv",
        }
    }
}

#[derive(Parser)]
#[command(name = "orbitstat", version, about = "visit statistics lab for chaotic maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a key=value config file.
    Run {
        config: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: all cores). Results are identical for
        /// any value; 1 marks the report for bit-exact checking.
        #[arg(long)]
        threads: Option<usize>,
        /// Directory prepended to the config's output_path.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Re-execute a report's embedded config and compare all numbers.
    Check {
        report: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Parse and validate a config without running it.
    Validate { config: PathBuf },
}

fn emit_error(err: &CliError) {
    let payload = json!({ "error": err.kind(), "message": err.to_string() });
    eprintln!("{payload}");
}

fn init_threads(threads: Option<usize>) -> usize {
    let n = threads.unwrap_or_else(num_threads_default);
    // ignore failure: the pool can only be set once per process
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    n
}

fn num_threads_default() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path)?;
    ExperimentConfig::from_text(&text)
}

fn run(
    config_path: &Path,
    seed: Option<u64>,
    threads: Option<usize>,
    output_dir: Option<PathBuf>,
) -> Result<(), CliError> {
    let threads = init_threads(threads);
    let mut config = load_config(config_path)?;
    if let Some(seed) = seed {
        config.set_seed(seed);
    }
    if let Some(dir) = output_dir {
        let joined = dir.join(&config.output_path);
        config.set_output_path(joined.to_string_lossy().into_owned());
    }

    let output = runner::execute(&config)?;
    let report = json!({
        "experiment": config.experiment.name(),
        "version": env!("CARGO_PKG_VERSION"),
        "threads": threads,
        "config": config.resolved_map(),
        "results": output.results,
    });

    let json_path = PathBuf::from(format!("{}.json", config.output_path));
    let csv_path = PathBuf::from(format!("{}.csv", config.output_path));
    if let Some(parent) = json_path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(&json_path, format!("{:#}\n", report))?;

    let mut writer = csv::WriterBuilder::new().from_path(&csv_path)?;
    writer.write_record(&output.csv_header)?;
    for row in &output.csv_rows {
        writer.write_record(row)?;
    }
    writer.flush()?;

    println!(
        "{} written: {} and {}",
        config.experiment.name(),
        json_path.display(),
        csv_path.display()
    );
    Ok(())
}

fn check(report_path: &Path, threads: Option<usize>) -> Result<bool, CliError> {
    let threads = init_threads(threads);
    let text = std::fs::read_to_string(report_path)?;
    let report: Value = serde_json::from_str(&text)?;
    let outcome = check::check_report(&report, threads)?;
    match outcome.mismatch {
        None => {
            println!("reproduced ({} comparison)", outcome.mode);
            Ok(true)
        }
        Some(field) => {
            let payload = json!({ "error": "mismatch", "message": field, "mode": outcome.mode });
            eprintln!("{payload}");
            Ok(false)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result: Result<u8, CliError> = match cli.command {
        Command::Run {
            config,
            seed,
            threads,
            output_dir,
        } => run(&config, seed, threads, output_dir).map(|()| 0),
        Command::Check { report, threads } => {
            check(&report, threads).map(|ok| if ok { 0 } else { 4 })
        }
        Command::Validate { config } => load_config(&config).map(|cfg| {
            println!("valid: {} on {}", cfg.experiment.name(), cfg.system.kind_name());
            0
        }),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            emit_error(&err);
            ExitCode::from(err.exit_code())
        }
    }
}
