use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod output;

/// Furuta pendulum simulator, LQR design and robustness experiments.
///
/// Without --config the bundled default configuration is used. Output
/// files go to --out, or to the config's output_dir relative to the
/// working directory.
#[derive(Debug, Parser)]
#[command(name = "furuta", version)]
pub struct Cli {
    /// Experiment config (JSON). Defaults to the bundled configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master seed; overrides run.seed.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Output directory; overrides output_dir.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the LQR design and print P, K, residual and closed-loop poles as JSON.
    Design {
        /// Solve the scalar case A = 0, B = 1, Q = 1, R = 1 instead (K = 1).
        #[arg(long)]
        scalar_selftest: bool,
    },
    /// Run one episode and write episode-<policy>.csv.
    Simulate {
        /// hybrid, lqr, swing, datagen-swing or datagen-balance.
        #[arg(long, default_value = "hybrid", value_name = "NAME")]
        policy: String,
    },
    /// Run a seeded Monte Carlo sweep and write sweep-<kind>.json.
    Sweep {
        /// noise or frequency.
        #[arg(long, value_name = "KIND")]
        kind: String,
    },
    /// Collect a state dataset and write dataset-<mode>.csv and histogram-<mode>.json.
    Collect {
        /// biased or unbiased.
        #[arg(long, value_name = "MODE")]
        mode: String,
    },
    /// Fit physical parameters to a linear model and write params.json.
    Calibrate {
        /// Linear model JSON with "A" and "B"; defaults to the config's design model.
        #[arg(long, value_name = "PATH")]
        target: Option<PathBuf>,
    },
    /// Run quick internal consistency checks.
    Selftest,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e.source);
            ExitCode::from(e.code)
        }
    }
}
