use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = eea_cli::Cli::parse();
    match eea_cli::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
