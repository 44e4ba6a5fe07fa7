//! Command-line front end of the torsion laboratory.
//!
//! Exit status: 0 success, 1 an analysis found a violation, 2 usage or
//! configuration error, 3 numerical failure.

pub mod args;
pub mod config;
pub mod error;
pub mod run;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

use args::{Cli, Command};
pub use config::RunConfig;
pub use error::CliError;

/// Parses `argv`, runs the command and returns the exit status.
pub fn main_with_args<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = cli.command.resolve().and_then(|cfg| match &cli.command {
        Command::Solve(_) => run::cmd_solve(&cfg),
        Command::Analyze(_) => run::cmd_analyze(&cfg),
        Command::Harmonic(_) => run::cmd_harmonic(&cfg),
    });
    match result {
        Ok(outcome) => {
            let mut out = std::io::stdout().lock();
            for f in &outcome.files {
                let _ = writeln!(out, "wrote {}", f.display());
            }
            if outcome.violation {
                let _ = writeln!(out, "violation found");
                1
            } else {
                0
            }
        }
        Err(e) => {
            eprintln!("torsion-lab: {e}");
            e.exit_code()
        }
    }
}
