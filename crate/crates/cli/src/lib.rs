//! Command-line frontend: argument parsing, dispatch, CSV/JSON output,
//! checkpoints for long sums, and the precision audit.

pub mod audit;
pub mod checkpoint;
pub mod config;
pub mod output;
pub mod run;

use std::ffi::OsString;
use std::io::Write;

use config::{parse_config, ParseOutcome};
use run::{EXIT_OK, EXIT_USAGE};

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match parse_config(args) {
        Ok(config) => run::run(&config, out, err),
        Err(ParseOutcome::Info(text)) => {
            let _ = write!(out, "{text}");
            EXIT_OK
        }
        Err(ParseOutcome::Usage(msg)) => {
            let _ = writeln!(err, "flinthills: error: {msg}");
            EXIT_USAGE
        }
    }
}
