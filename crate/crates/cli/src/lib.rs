//! Command-line front end. [`run`] parses arguments, executes one command and returns the
//! process exit status: 0 success, 1 validation error, 2 infeasible or mismatching result,
//! 3 i/o error.

pub mod args;
pub mod commands;
pub mod error;
pub mod files;

use std::ffi::OsString;
use std::io::Write;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
pub use error::{CliError, CliResult};

/// Applies `TOPOPLAN_THREADS` (0 or unset: one worker per core) to the global pool.
fn configure_threads() -> CliResult<()> {
    let threads = match std::env::var("TOPOPLAN_THREADS") {
        Ok(v) => v.trim().parse::<usize>().map_err(|_| {
            CliError::usage(format!("TOPOPLAN_THREADS must be an integer, got {v:?}"))
        })?,
        Err(_) => 0,
    };
    if threads > 0 {
        // A pool may already exist when called repeatedly in-process.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    Ok(())
}

pub fn execute(command: &Command, out: &mut dyn Write) -> CliResult<()> {
    configure_threads()?;
    match command {
        Command::Gen(a) => commands::gen(a, out),
        Command::Exact(a) => commands::exact(a, out),
        Command::Moea(a) => commands::moea(a, out),
        Command::Metrics(a) => commands::metrics(a, out),
        Command::Oracle(a) => commands::oracle(a, out),
    }
}

/// Runs with `out` as standard output; errors go to standard error.
pub fn run_with<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    run_with(args, &mut lock)
}
