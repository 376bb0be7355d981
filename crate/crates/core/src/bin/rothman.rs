use std::process::ExitCode;

use clap::Parser;
use rothman::cli::{describe_error, exit_code, run, Cli};

fn main() -> ExitCode {
    match run(&Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", describe_error(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}
