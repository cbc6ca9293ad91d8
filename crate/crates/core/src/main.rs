use std::process::ExitCode;

use clap::Parser;

mod cli;

use cli::{InternalError, RunConfig};

fn main() -> ExitCode {
    let config = RunConfig::parse();
    match cli::run(&config) {
        Ok(outcome) => {
            print!("{}", outcome.text);
            if config.output.strict && outcome.inconclusive {
                eprintln!("inconclusive verdict under --strict");
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<InternalError>() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
