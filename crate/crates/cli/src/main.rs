use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use sta_interferometer::harness::{
    export_waveform, run_eigensolve, run_scenario, run_suite, run_sweep, CheckKind, OutputFormat, RunOptions,
    Scenario, SuiteName,
};
use sta_interferometer::Error;

const EXIT_PHYSICS: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

/// Guided-arm atom interferometer simulator.
///
/// Exit codes: 0 all checks pass, 1 physics-invariant failure,
/// 2 configuration error, 3 numerical-gate failure.
#[derive(Parser)]
#[command(name = "stai", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Multiply the default time-step ceiling by this factor (at most 1).
    #[arg(long, global = true)]
    dt_scale: Option<f64>,

    /// Seed for noisy pivots and random initial superpositions.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory for artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Format of per-run records.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// UNSAFE: skip the half-step convergence rerun; results are unverified.
    #[arg(long, global = true)]
    no_gate: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file.
    Run { config: PathBuf },
    /// Run a built-in suite.
    Suite {
        #[arg(value_parser = parse_suite)]
        name: SuiteName,
    },
    /// Run the sweep axes of a scenario file.
    Sweep { config: PathBuf },
    /// Solve the tilted trap of a scenario file.
    Eigensolve { config: PathBuf },
    /// Write the trap trajectory of a scenario file as CSV.
    ExportWaveform { config: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn parse_suite(s: &str) -> Result<SuiteName, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::TomlDe(_)
        | Error::TomlSer(_)
        | Error::UnknownUnit(_)
        | Error::InvalidUnits(_)
        | Error::DimensionMismatch { .. }
        | Error::InvalidParameter(_)
        | Error::NonpositiveDuration(_)
        | Error::InconsistentConstraints { .. }
        | Error::SingularSystem { .. }
        | Error::Io(_)
        | Error::Csv(_)
        | Error::Json(_) => EXIT_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}

fn kind_code(kind: Option<CheckKind>) -> u8 {
    match kind {
        None => 0,
        Some(CheckKind::Physics) => EXIT_PHYSICS,
        Some(CheckKind::Numerical) => EXIT_NUMERICAL,
    }
}

fn load(path: &Path) -> Result<Scenario, Error> {
    Scenario::load(path)
}

fn out_dir(cli: &Cli, scenario: Option<&Scenario>) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| scenario.and_then(|s| s.output.dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn execute(cli: &Cli) -> Result<u8, Error> {
    let opts = RunOptions {
        dt_scale: cli.dt_scale,
        seed: cli.seed,
        out_dir: cli.out.clone(),
        format: cli.format.map(|f| match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }),
        no_gate: cli.no_gate,
    };
    if cli.no_gate {
        eprintln!("warning: convergence gate disabled; results are unverified");
    }
    match &cli.command {
        Command::Run { config } => {
            let outcome = run_scenario(&load(config)?, &opts)?;
            println!("{}", serde_json::to_string_pretty(&outcome.record)?);
            for p in &outcome.artifacts {
                eprintln!("wrote {}", p.display());
            }
            Ok(kind_code(outcome.record.failed_kind()))
        }
        Command::Suite { name } => {
            let report = run_suite(*name, &opts);
            for c in &report.checks {
                println!(
                    "[{}] {}: {:.3e} (threshold {:.3e})",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.value,
                    c.threshold
                );
            }
            println!("{}", report.summary);
            if let Some(dir) = &cli.out {
                std::fs::create_dir_all(dir)?;
                let path = dir.join(format!("{name}_report.json"));
                serde_json::to_writer_pretty(std::fs::File::create(&path)?, &report)?;
                eprintln!("wrote {}", path.display());
            }
            let failed = |k| report.checks.iter().any(|c| !c.passed && c.kind == k);
            Ok(if failed(CheckKind::Numerical) {
                EXIT_NUMERICAL
            } else if failed(CheckKind::Physics) {
                EXIT_PHYSICS
            } else {
                0
            })
        }
        Command::Sweep { config } => {
            let report = run_sweep(&load(config)?, &opts)?;
            println!("{} points", report.rows.len());
            if let Some(e) = &report.estimate {
                println!("estimated force: {:e} (residual {:.3e})", e.c_hat, e.residual);
                if let Some(w) = &e.warning {
                    eprintln!("warning: {w}");
                }
            }
            for p in &report.artifacts {
                eprintln!("wrote {}", p.display());
            }
            let worst = report
                .rows
                .iter()
                .filter_map(|r| r.run.as_ref())
                .map(|r| kind_code(r.failed_kind()))
                .max()
                .unwrap_or(0);
            Ok(worst)
        }
        Command::Eigensolve { config } => {
            let scenario = load(config)?;
            let dir = out_dir(cli, Some(&scenario));
            let (eigen, paths) = run_eigensolve(&scenario, &dir)?;
            for (n, lam) in eigen.eigenvalues.iter().enumerate() {
                println!("{n} {lam:.12e}");
            }
            for p in &paths {
                eprintln!("wrote {}", p.display());
            }
            Ok(0)
        }
        Command::ExportWaveform { config } => {
            let scenario = load(config)?;
            let dir = out_dir(cli, Some(&scenario));
            let path = export_waveform(&scenario, &dir)?;
            eprintln!("wrote {}", path.display());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
