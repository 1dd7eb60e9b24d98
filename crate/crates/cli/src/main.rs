mod args;
mod commands;
mod error;
mod output;
mod plot;
mod verify;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::SweepDelta(a) => commands::sweep_delta(a),
        Command::SweepVisibility(a) => commands::sweep_visibility_cmd(a),
        Command::Montecarlo(a) => commands::montecarlo(a),
        Command::Verify(a) => verify::verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
