//! Command-line front end: `run`, `compare` and `bench`.

pub mod args;
pub mod artifacts;
pub mod commands;
pub mod error;
pub mod exec;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

use crate::args::{Cli, Command};
use crate::error::CliError;

/// Parses `argv`, runs the command and returns the process exit code.
/// Failures are reported on stderr as one JSON record.
pub fn main_with<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            let err = CliError::Config(e.to_string().trim_end().to_string());
            report(&err);
            return err.exit_code().into();
        }
    };
    match dispatch(&cli.command) {
        Ok(()) => 0,
        Err(err) => {
            report(&err);
            err.exit_code().into()
        }
    }
}

fn dispatch(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Run(args) => {
            let report = commands::cmd_run(args)?;
            log::info!("wrote {} score files to {}", report.scores.len(), args.out.display());
            Ok(())
        }
        Command::Compare(args) => {
            let (report, failure) = commands::cmd_compare(args)?;
            let mut stdout = std::io::stdout().lock();
            serde_json::to_writer_pretty(&mut stdout, &report)?;
            writeln!(stdout)?;
            failure.map_or(Ok(()), Err)
        }
        Command::Bench(args) => commands::cmd_bench(args).map(|_| ()),
    }
}

fn report(err: &CliError) {
    match serde_json::to_string(&err.record()) {
        Ok(line) => eprintln!("{line}"),
        Err(_) => eprintln!("{err}"),
    }
}
