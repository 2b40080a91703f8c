mod args;
mod commands;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use gale_core::GaleError;

use args::{Cli, Command};

const USAGE: u8 = 1;
const DATA: u8 = 2;

fn exit_code(e: &GaleError) -> u8 {
    match e {
        GaleError::Config(_) => USAGE,
        _ => DATA,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(USAGE),
            };
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start {} workers: {e}", cli.jobs);
            return ExitCode::from(USAGE);
        }
    };
    let result = pool.install(|| match &cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Train(a) => commands::train(a),
        Command::Explain(a) => commands::explain(a),
        Command::Mapper(a) => commands::mapper(a),
        Command::Persistence(a) => commands::persistence(a),
        Command::Compare(a) => commands::compare(a),
        Command::Tune(a) => commands::tune(a),
        Command::Experiment(a) => commands::experiment(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
