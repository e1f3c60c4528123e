//! `paulictl`: command-line front end for the Pauli channel toolkit.
//!
//! Exit codes: 0 success, 1 invalid input or usage, 2 runtime or estimation
//! failure (including a failed verification), 3 bench sweep with some
//! failed trials.

mod args;
mod commands;
mod render;

use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use pauli_channel::Error;

use args::Cli;

const EXIT_VALIDATION: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_VALIDATION),
            };
        }
    };
    let g = cli.global;
    match commands::run(cli.command, g.seed) {
        Ok(outcome) => {
            if !g.quiet {
                for note in &outcome.notes {
                    eprintln!("{note}");
                }
            }
            let mut stdout = std::io::stdout().lock();
            if let Err(e) = render::write(&mut stdout, &outcome.rendered, g.output).and_then(|_| stdout.flush()) {
                eprintln!("error: writing output: {e}");
                return ExitCode::from(EXIT_RUNTIME);
            }
            ExitCode::from(outcome.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    // Unreadable input files are the caller's problem, not a failed run.
    if e.is_validation() || matches!(e, Error::Io(_)) {
        EXIT_VALIDATION
    } else {
        EXIT_RUNTIME
    }
}
