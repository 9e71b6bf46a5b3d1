mod cli;
mod cmd;
mod config;
mod error;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{CommandFactory, FromArgMatches};
use log::LevelFilter;

use crate::cli::{Cli, Command};
use crate::error::Result;

/// Parses `argv`, filling flags the user left out from `--config`.
fn parse(argv: Vec<OsString>) -> std::result::Result<Cli, clap::Error> {
    let command = Cli::command();
    // A lenient first pass finds the config file even when required flags
    // are expected to come from it.
    let loose = command.clone().ignore_errors(true).try_get_matches_from(&argv)?;
    let sub = loose.subcommand();
    let config = sub
        .and_then(|(_, m)| m.get_one::<PathBuf>("config"))
        .or_else(|| loose.get_one::<PathBuf>("config"))
        .cloned();
    let argv = match (config, sub) {
        (Some(path), Some((name, _))) => {
            let entries = config::load(&path).map_err(|e| command.clone().error(ErrorKind::Io, e))?;
            config::merge(&command, name, argv, &entries).map_err(|e| command.clone().error(ErrorKind::UnknownArgument, e))?
        }
        _ => argv,
    };
    Cli::from_arg_matches(&command.try_get_matches_from(argv)?)
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate(args) => cmd::simulate::run(args, cli.seed),
        Command::Ingest(args) => cmd::ingest::run(args),
        Command::Train(args) => cmd::train::run(args, cli.seed),
        Command::Benchmark(args) => cmd::benchmark::run(args),
        Command::Serve(args) => cmd::serve::serve(args),
        Command::Replay(args) => cmd::serve::replay(args),
    }
}

fn main() -> ExitCode {
    let cli = match parse(std::env::args_os().collect()) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => LevelFilter::Warn,
        1 => LevelFilter::Info,
        _ => LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_env("TWIN_LOG").init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.kind());
            ExitCode::from(e.exit_code())
        }
    }
}

