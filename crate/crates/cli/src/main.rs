use std::process::ExitCode;

use splitfov_cli::{parse_cli, run, UsageError};

fn main() -> ExitCode {
    let cfg = match parse_cli(std::env::args_os()) {
        Ok(cfg) => cfg,
        Err(UsageError::Clap(e)) => e.exit(),
        Err(UsageError::Invalid(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    match run(cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
