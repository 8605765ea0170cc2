mod args;
mod commands;
mod output;

use std::fmt;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

/// Failure classes with their exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Exit 2.
    Config(String),
    /// Exit 3.
    Diagnostic(String),
    /// Exit 1.
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Diagnostic(_) => 3,
            CliError::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Diagnostic(m) => write!(f, "diagnostic: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<ftmetro::Error> for CliError {
    fn from(e: ftmetro::Error) -> Self {
        use ftmetro::Error::*;
        match e {
            InvalidParameter(_) | Domain(_) | ModelBreakdown(_) | ThresholdViolated(_) | SizeLimit(_) => {
                CliError::Config(e.to_string())
            }
            NoCrossing(_) => CliError::Diagnostic(e.to_string()),
            Structural(_) | InfiniteFisher(_) => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    if let Some(j) = cli.common.jobs {
        if j == 0 {
            return Err(CliError::Config("--jobs must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    let config = serde_json::to_value(&cli).map_err(|e| CliError::Runtime(e.to_string()))?;
    let seed = cli.common.seed;
    let outcome = match cli.command {
        Command::PrepSweep(a) => commands::prep_sweep(&a, seed, config)?,
        Command::Threshold(a) => commands::threshold(a, seed, config)?,
        Command::Fisher(a) => commands::fisher(&a, seed, config)?,
        Command::Compare(a) => commands::compare(&a, seed, config)?,
        Command::MeasureSim(a) => commands::measure_sim(&a, seed, config)?,
        Command::DecodeCheck(a) => commands::decode_check(&a, seed, config)?,
    };
    outcome.report.write_to(cli.common.out.as_deref(), cli.common.format)?;
    Ok(outcome.code as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}
