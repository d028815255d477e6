use std::process::ExitCode;

use clap::Parser;
use etpa_cli::{run, Cli};

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(stdout) => {
            print!("{stdout}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
