mod args;
mod commands;
mod output;

use std::ffi::OsString;
use std::path::Path;
use std::process::ExitCode;

use clap::{CommandFactory, Parser};

use fallsense::Error;

pub use args::Cli;

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_INPUT: u8 = 3;
pub const EXIT_INCOMPLETE: u8 = 4;
pub const EXIT_RUNTIME: u8 = 5;

/// Failure class of a command.
#[derive(Debug)]
pub enum Failure {
    Error(Error),
    /// Some requested cells or rows could not be produced.
    Incomplete(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) | Error::Unknown { .. } => EXIT_USAGE,
        Error::Io { .. }
        | Error::Schema(_)
        | Error::Parse { .. }
        | Error::EmptyDataset
        | Error::SampleRange { .. }
        | Error::Degenerate(_)
        | Error::LengthMismatch { .. }
        | Error::Model(_)
        | Error::FeatureMismatch { .. } => EXIT_INPUT,
        Error::Wire(_) | Error::Network(_) => EXIT_RUNTIME,
    }
}

pub fn main() -> ExitCode {
    let raw: Vec<OsString> = std::env::args_os().collect();
    let argv = match with_config(raw) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let cli = match Cli::try_parse_from(argv.clone()) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("worker pool: {e}");
        }
    }
    let argv: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match commands::run(&cli, &argv) {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(Failure::Incomplete(why)) => {
            eprintln!("incomplete: {why}");
            ExitCode::from(EXIT_INCOMPLETE)
        }
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// Appends `--key value` for every config entry whose flag is absent from
/// the command line. Unknown keys surface as unknown-flag errors.
fn with_config(mut argv: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let strs: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let path = strs.iter().enumerate().find_map(|(i, a)| {
        a.strip_prefix("--config=")
            .map(str::to_string)
            .or_else(|| (a == "--config").then(|| strs.get(i + 1).cloned()).flatten())
    });
    let Some(path) = path else { return Ok(argv) };
    let text = std::fs::read_to_string(Path::new(&path)).map_err(|e| format!("config {path}: {e}"))?;
    let cmd = Cli::command();
    let sub_cmd = strs.iter().skip(1).find_map(|s| cmd.find_subcommand(s));
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("config {path} line {}: expected key=value", n + 1))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        let flag = format!("--{key}");
        if key == "config" || strs.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}="))) {
            continue;
        }
        let arg = sub_cmd
            .and_then(|c| c.get_arguments().find(|a| a.get_long() == Some(key.as_str())))
            .or_else(|| cmd.get_arguments().find(|a| a.get_long() == Some(key.as_str())));
        let takes_value = arg.is_none_or(|a| a.get_action().takes_values());
        if takes_value {
            argv.push(format!("{flag}={value}").into());
        } else if matches!(value, "true" | "1" | "yes") {
            argv.push(flag.into());
        }
    }
    Ok(argv)
}
