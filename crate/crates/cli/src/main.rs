use std::panic;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use holo_lab_cli::config::parse_tol;
use holo_lab_cli::{run, CliError, Overrides, RunConfig};

/// Run a holo-lab verification suite described by a JSON config.
#[derive(Debug, Parser)]
#[command(name = "holo-lab", version)]
struct Args {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Seed for randomized suites; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for report.json and CSV files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated grid radii, e.g. 0.1,0.5,0.9.
    #[arg(long, value_delimiter = ',')]
    grid_radii: Option<Vec<f64>>,
    /// Tolerance override NAME=VALUE; repeatable.
    #[arg(long = "tol", value_parser = parse_tol)]
    tolerances: Vec<(String, f64)>,
    /// Write CSV plot data (requires --out).
    #[arg(long)]
    emit_plots: bool,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("HOLO_LAB_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Invalid(format!("HOLO_LAB_THREADS = '{raw}' is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Internal(e.to_string()))
}

fn execute(args: Args) -> Result<i32, CliError> {
    configure_threads()?;
    if args.emit_plots && args.out.is_none() {
        return Err(CliError::Invalid("--emit-plots needs --out DIR".into()));
    }
    let mut cfg = RunConfig::load(&args.config)?;
    cfg.apply(&Overrides { seed: args.seed, grid_radii: args.grid_radii, tolerances: args.tolerances })?;

    let started = Instant::now();
    let outcome = run(&cfg, args.emit_plots)?;
    if let Some(dir) = &args.out {
        outcome.write(dir, args.emit_plots)?;
    }
    print!("{}", outcome.report.to_json());
    for line in outcome.report.failures() {
        eprintln!("{line}");
    }
    eprintln!("{} finished in {:.3} s", cfg.command.as_str(), started.elapsed().as_secs_f64());
    Ok(outcome.exit_code())
}

fn parse_and_execute() -> Result<i32, CliError> {
    match Args::try_parse() {
        Ok(args) => execute(args),
        Err(e) => {
            let _ = e.print();
            Ok(if e.use_stderr() { 2 } else { 0 })
        }
    }
}

fn main() -> ExitCode {
    let code = match panic::catch_unwind(parse_and_execute) {
        Ok(Ok(code)) => code,
        Ok(Err(e)) => {
            eprintln!("holo-lab: {e}");
            e.exit_code()
        }
        Err(_) => {
            eprintln!("holo-lab: internal error (panic)");
            3
        }
    };
    ExitCode::from(code as u8)
}
