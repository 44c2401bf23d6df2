mod args;
mod commands;
mod error;

use std::process::ExitCode;

use clap::Parser;

use args::Cli;
use error::{exit_code, EXIT_INPUT};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and --version go to stdout and succeed; every other clap error is a usage error
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error ({}): {e:#}", cli.command.name());
            ExitCode::from(exit_code(&e))
        }
    }
}
