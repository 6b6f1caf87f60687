//! Batch front end: `solve`, `bench`, `verify` and `report`.
//!
//! Exit codes: 0 success, 1 configuration or other error, 2 endpoints not
//! admissible (rerun with `--force`), 3 Birkhoff step budget exhausted,
//! 4 missing or corrupted artifacts, 5 verification failure or fitted
//! exponent outside its window.

mod bench;
mod config;
mod inspect;
mod record;
mod solve;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use config::{BenchConfig, ConfigError, RunConfig};
use record::MissingArtifacts;

const DEFAULT_OUTPUT: &str = "maupertuis-out";

#[derive(Parser)]
#[command(
    name = "maupertuis",
    version,
    about = "Jacobi-metric geodesics by grid Birkhoff shortening"
)]
struct Cli {
    /// Worker threads for benchmark cases (default: logical cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Run even when the endpoints fail the admissibility check.
    #[arg(long, global = true)]
    force: bool,
    /// Output directory; overrides the config's `output_dir`.
    #[arg(long, global = true, env = "MAUPERTUIS_OUTPUT")]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Refine a geodesic between two endpoints and recover its timing.
    Solve { config: PathBuf },
    /// Run the exponential-metric convergence benchmark.
    Bench { config: PathBuf },
    /// Recompute and check the artifacts of a run or benchmark directory.
    Verify { dir: PathBuf },
    /// Summarize a run or benchmark directory.
    Report { dir: PathBuf },
}

/// Failure that maps to exit code 5.
#[derive(Debug)]
struct CheckFailed(String);

impl std::fmt::Display for CheckFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for CheckFailed {}

fn output_dir(flag: &Option<PathBuf>, configured: &Option<PathBuf>) -> PathBuf {
    flag.clone()
        .or_else(|| configured.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT))
}

fn run(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(ConfigError("invalid `--jobs`: must be positive".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()?;
    }
    match &cli.command {
        Command::Solve { config } => {
            let cfg = RunConfig::load(config)?;
            let out = output_dir(&cli.output, &cfg.output_dir);
            let record = solve::solve(&cfg, &out, cli.force)?;
            let last = record.levels.last();
            println!(
                "solved {} levels (final M = {}, length = {}), converged = {}, forced = {}",
                record.levels.len(),
                last.map_or(0, |l| l.m),
                last.map_or(f64::NAN, |l| l.length),
                record.converged,
                record.forced
            );
            if let Some(t) = &record.trajectory {
                println!("T0 = {}", t.t0);
            }
            println!("wrote {}", out.display());
        }
        Command::Bench { config } => {
            let cfg = BenchConfig::load(config)?;
            let out = output_dir(&cli.output, &cfg.output_dir);
            let record = bench::bench(&cfg, &out)?;
            print!("{}", inspect::report(&out)?);
            println!("wrote {}", out.display());
            if !record.all_within_windows {
                return Err(
                    CheckFailed("fitted exponents outside the configured windows".into()).into(),
                );
            }
        }
        Command::Verify { dir } => {
            let issues = inspect::verify(dir)?;
            if !issues.is_empty() {
                for i in &issues {
                    eprintln!("{i}");
                }
                return Err(CheckFailed(format!(
                    "{} check(s) failed in {}",
                    issues.len(),
                    dir.display()
                ))
                .into());
            }
            println!("{}: all artifacts verified", dir.display());
        }
        Command::Report { dir } => print!("{}", inspect::report(dir)?),
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<MissingArtifacts>().is_some() {
        return 4;
    }
    if err.downcast_ref::<CheckFailed>().is_some() {
        return 5;
    }
    match err.downcast_ref::<maupertuis::Error>() {
        Some(maupertuis::Error::NotAdmissible(_)) => 2,
        Some(maupertuis::Error::StepBudgetExceeded { .. }) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    // clap's own usage errors exit with 2, which is taken by NotAdmissible
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let code = exit_code(&err);
            eprintln!("error: {err:#}");
            if code == 2 {
                eprintln!("hint: pass --force to run anyway; the run will be marked as forced");
            }
            ExitCode::from(code)
        }
    }
}
