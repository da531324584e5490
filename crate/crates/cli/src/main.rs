//! `spinperc`: experiments on monotone Glauber and bootstrap dynamics.

mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::Parser;

use config::Cli;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] spinperc::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 for anything rejected before or during validation, 3 for runs
    /// aborted because a support kept escaping the simulated region.
    fn exit_code(&self) -> u8 {
        use spinperc::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Core(E::SupportEscaped { .. } | E::MarginExhausted { .. }) => 3,
            CliError::Core(E::Io(_)) | CliError::Io(_) => 1,
            CliError::Core(_) => 2,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(paths) => {
            for p in paths {
                eprintln!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("spinperc: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
