//! `wz` command line: run convergence scenarios, list the built-in ones,
//! and verify the exact discrete identities.
//!
//! Exit codes: 0 success, 1 config error, 2 scenario failure (an acceptance
//! threshold was breached), 3 internal error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wz_core::lab::{
    refinement_probe, run_identity_suite, run_scenario, ScenarioConfig, ScenarioKind,
};
use wz_core::Error;

#[derive(Parser)]
#[command(name = "wz", version, about = "Wong-Zakai approximation lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario described by a flat key-value config file.
    Run {
        /// Path to the config file.
        #[arg(long)]
        config: PathBuf,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the output directory for report.json / errors.csv /
        /// tensors.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the built-in scenarios.
    List,
    /// Run the exact algebraic-identity suite (no Monte Carlo).
    Verify {
        /// Number of randomized inputs per identity.
        #[arg(long, default_value_t = 100)]
        seeds: u64,
    },
}

const EXIT_CONFIG: u8 = 1;
const EXIT_SCENARIO: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, seed, out } => run(config, seed, out),
        Command::List => {
            for kind in ScenarioKind::all() {
                println!("{:<24} {}", kind.name(), kind.describe());
            }
            ExitCode::SUCCESS
        }
        Command::Verify { seeds } => verify(seeds),
    }
}

fn run(config_path: PathBuf, seed: Option<u64>, out: Option<PathBuf>) -> ExitCode {
    let text = match std::fs::read_to_string(&config_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", config_path.display());
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let mut config = match ScenarioConfig::from_flat_text(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Some(seed) = seed {
        config.seed = seed;
    }
    if let Some(out) = out {
        config.out_dir = Some(out);
    }

    match run_scenario(&config) {
        Ok(report) => {
            print!("{}", report.summary());
            if let Some(dir) = &config.out_dir {
                println!("artifacts written to {}", dir.display());
            }
            if report.failures.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_SCENARIO)
            }
        }
        Err(e @ Error::Config { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(e @ Error::ScenarioFailure(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_SCENARIO)
        }
        Err(e) => {
            eprintln!("internal error: {e}");
            ExitCode::from(EXIT_INTERNAL)
        }
    }
}

fn verify(seeds: u64) -> ExitCode {
    match run_identity_suite(seeds) {
        Ok(rows) => {
            let mut all_pass = true;
            for row in &rows {
                println!(
                    "{:<32} max residual {:>12.3e}  tolerance {:.0e}  {}",
                    row.name,
                    row.max_residual,
                    row.tolerance,
                    if row.pass { "pass" } else { "FAIL" }
                );
                all_pass &= row.pass;
            }
            if let Ok(delta) = refinement_probe() {
                println!("refinement probe (monitored): {delta:.3e}");
            }
            if all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_SCENARIO)
            }
        }
        Err(e) => {
            eprintln!("internal error: {e}");
            ExitCode::from(EXIT_INTERNAL)
        }
    }
}
