mod args;
mod commands;
mod config;
mod error;
mod report;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use crate::args::Cli;
use crate::config::ConfigFile;
use crate::error::CliError;

fn run(cli: &Cli) -> Result<(), CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
        .map_err(|e| CliError::config(format!("cannot start thread pool: {e}")))?;
    let file = ConfigFile::load(cli.config.as_deref())?;
    commands::run(&cli.command, &file)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.render().to_string();
            let first = msg.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
            let err = CliError::config(first.trim_start_matches("error: ").to_string());
            eprintln!("{}", err.to_json_line());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
