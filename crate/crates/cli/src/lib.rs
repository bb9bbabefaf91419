//! The `huberbench` command line. [`run_cli`] parses the arguments, merges
//! them with an optional config file and dispatches to the library.

mod args;
mod commands;
mod parse;
mod settings;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;

use clap::{CommandFactory, FromArgMatches};
use huberbench_core::data::read_dataset_csv;
use huberbench_core::ContaminatedDataset;

pub use args::Cli;
pub use settings::{parse_config, SEED_ENV};

/// Exit code on success.
pub const EXIT_OK: i32 = 0;
/// Exit code on a usage error (bad flag, bad config, missing setting).
pub const EXIT_USAGE: i32 = 1;
/// Exit code when the library or the file system fails.
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<huberbench_core::Error> for CliError {
    fn from(e: huberbench_core::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

/// Reads a dataset CSV (`x_1,…,x_p,y[,is_outlier]`). Errors carry the path
/// and, for malformed content, the line number.
pub fn load_dataset_csv(path: impl AsRef<Path>) -> Result<ContaminatedDataset, CliError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    read_dataset_csv(BufReader::new(file)).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

/// Runs one invocation and returns its exit code. Results go to `out`,
/// diagnostics and help to `err`.
pub fn run_cli<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let mut command = Cli::command();
    if argv.len() <= 1 {
        let _ = writeln!(err, "{}", command.render_help());
        return EXIT_USAGE;
    }
    let matches = match command.try_get_matches_from_mut(&argv) {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return EXIT_USAGE;
        }
    };
    let mut sub = &mut command;
    for name in commands::subcommand_path(&matches) {
        sub = sub.find_subcommand_mut(name).expect("matched subcommand exists");
    }
    match commands::dispatch(&cli, sub, &matches, out, err) {
        Ok(()) => EXIT_OK,
        Err(CliError::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}\n");
            let _ = writeln!(err, "{}", sub.render_help());
            EXIT_USAGE
        }
        Err(CliError::Runtime(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_RUNTIME
        }
    }
}
