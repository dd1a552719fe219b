//! `utsgan`: prepare spectrogram corpora, train unified or serial models,
//! evaluate them by FID, plot runs and export synthetic series.
//!
//! Exit codes: 0 on success, 1 for invalid input or configuration, 2 when
//! a run fails.

mod args;
mod commands;
mod failure;
mod settings;
mod table;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match &cli.command {
        Command::Prepare(a) => commands::prepare::run(a),
        Command::Train(a) => commands::train::run(a),
        Command::Evaluate(a) => commands::evaluate::run(a),
        Command::Plot(a) => commands::plot::run(a),
        Command::Generate(a) => commands::generate::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}
