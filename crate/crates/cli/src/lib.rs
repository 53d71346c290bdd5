//! Command-line front end for `qmcqoi`.
//!
//! Exit codes: 0 when every QOI converged (or a study finished), 2 when the
//! sample budget ran out first, 1 on any error.

pub mod commands;
pub mod config;
pub mod output;

use std::fs;
use std::io::Write;

use clap::Parser;

use commands::Outcome;
use config::{parse_config, Cli, ConfigError, SEED_ENV};
use qmcqoi::RunStatus;

pub const EXIT_CONVERGED: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_BUDGET: u8 = 2;

/// Parses `argv`, runs the command and writes its output. Returns the exit
/// code; error messages go to `stderr`.
pub fn main_with<I, T>(argv: I, env_seed: Option<&str>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_CONVERGED };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { stderr.write_all(text.as_bytes()) } else { stdout.write_all(text.as_bytes()) };
            return code;
        }
    };
    match run_cli(cli, env_seed, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_ERROR
        }
    }
}

fn run_cli(cli: Cli, env_seed: Option<&str>, stdout: &mut dyn Write) -> Result<u8, ConfigError> {
    let (command, args) = cli.command.split();
    let config = parse_config(command, args, env_seed)?;
    let (text, code) = match commands::execute(&config)? {
        Outcome::Run { report, labels } => {
            let code = match report.status {
                RunStatus::Converged => EXIT_CONVERGED,
                RunStatus::BudgetExhausted => EXIT_BUDGET,
            };
            (output::render_report(command, &report, labels.as_deref(), config.format), code)
        }
        Outcome::Study(table) => (output::render_study(&table, config.format), EXIT_CONVERGED),
    };
    match &config.output {
        Some(path) => fs::write(path, text).map_err(|e| ConfigError(format!("cannot write {}: {e}", path.display())))?,
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| ConfigError(format!("cannot write output: {e}")))?,
    }
    Ok(code)
}

/// Reads the seed fallback from the environment.
pub fn env_seed() -> Option<String> {
    std::env::var(SEED_ENV).ok()
}
