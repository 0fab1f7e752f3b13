//! `denfunc`: CSV samples in, JSON reports out.
//!
//! Exit codes: 0 success (or fail-to-reject for `citest`), 1 configuration
//! error, 2 input/output error, 3 conditional independence rejected,
//! 4 numeric failure.

mod args;
mod commands;
mod error;
mod input;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{CommandFactory, FromArgMatches};

use crate::args::{Cli, Command};
use crate::error::{CliError, CliResult};

const THREADS_VAR: &str = "DENFUNC_THREADS";

fn version() -> String {
    format!(
        "{} (library {}, schema {})",
        env!("CARGO_PKG_VERSION"),
        denfunc_core::VERSION,
        denfunc_core::SCHEMA_VERSION
    )
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::config(format!("{THREADS_VAR} must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::config(format!("{THREADS_VAR}: {e}")))
}

fn run(cli: &Cli) -> CliResult<i32> {
    configure_threads()?;
    match &cli.command {
        Command::Estimate(a) => commands::run_estimate(a),
        Command::Cmi(a) => commands::run_cmi(a),
        Command::Citest(a) => commands::run_citest(a),
        Command::Bounds(a) => commands::run_bounds(a),
        Command::KdeCheck(a) => commands::run_kde_check(a),
        Command::Rate(a) => commands::run_rate(a),
        Command::Tail(a) => commands::run_tail(a),
    }
}

fn main() -> ExitCode {
    let matches = Cli::command().version(version()).try_get_matches();
    let cli = match matches.and_then(|m| Cli::from_arg_matches(&m)) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("denfunc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
