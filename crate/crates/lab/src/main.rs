use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stbddc::solvers::SolverConfig;
use stbddc::stbddc::Perturbation;
use stbddc_lab::config::{parse_threads, ExperimentConfig, THREADS_ENV};
use stbddc_lab::output::write_outputs;
use stbddc_lab::sweep::run_sweep;
use stbddc_lab::{table1, verify, LabError};

/// Space-time BDDC experiment runner.
///
/// The STBDDC_THREADS environment variable overrides the configured thread
/// count (default 1).
#[derive(Parser)]
#[command(name = "stbddc-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep described by a TOML config; writes CSV plus a JSON sidecar.
    Run { config: PathBuf },
    /// Run the property battery and print one line per property.
    Verify {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Viscosity sweep of the CDR iteration-count table.
    Table1 {
        /// Number of rows; row r uses the (3r x 3r) x r partition.
        #[arg(long, default_value_t = 1)]
        rows: usize,
        #[arg(long, default_value = "table1.csv")]
        output: PathBuf,
    },
}

fn threads_from_env() -> Result<Option<usize>, LabError> {
    std::env::var(THREADS_ENV).ok().map(|v| parse_threads(&v)).transpose()
}

fn run(config: PathBuf) -> Result<bool, LabError> {
    let mut cfg = ExperimentConfig::load(&config)?;
    cfg.apply_env()?;
    let outcome = run_sweep(&cfg)?;
    write_outputs(&cfg, &outcome)?;
    println!("wrote {} rows to {}", outcome.rows.len(), cfg.output.display());
    Ok(outcome.all_converged())
}

fn verify_cmd(seed: u64) -> Result<bool, LabError> {
    let checks = verify::verify_suite(seed, Perturbation::default())?;
    for c in &checks {
        println!("{}", c.line());
    }
    Ok(checks.iter().all(|c| c.passed))
}

fn table1_cmd(rows: usize, output: PathBuf) -> Result<bool, LabError> {
    if rows == 0 {
        return Err(LabError::Config("--rows must be at least 1".into()));
    }
    let solver = SolverConfig { threads: threads_from_env()?.unwrap_or(1), ..SolverConfig::default() };
    let cfg = table1::config(rows, output, solver);
    let outcome = run_sweep(&cfg)?;
    write_outputs(&cfg, &outcome)?;
    println!("{:<14} {}", "partition", table1::VISCOSITIES.map(|v| format!("{v:>8.0e}")).join(""));
    for (r, chunk) in outcome.rows.chunks(table1::VISCOSITIES.len()).enumerate() {
        let counts: Vec<String> =
            chunk.iter().map(|row| row.linear_iterations.map_or("-".to_string(), |n| n.to_string())).map(|s| format!("{s:>8}")).collect();
        let first = &chunk[0];
        println!("{:<14} {}", format!("({}x{})x{}", first.px, first.py, first.pt), counts.join(""));
        if let Some(reference) = table1::REFERENCE.get(r) {
            println!("{:<14} {}", "  reference", reference.map(|n| format!("{n:>8}")).join(""));
        }
    }
    println!("wrote {}", cfg.output.display());
    Ok(outcome.all_converged())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config } => run(config),
        Command::Verify { seed } => verify_cmd(seed),
        Command::Table1 { rows, output } => table1_cmd(rows, output),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
