mod args;
mod commands;
mod config;
mod error;
mod output;
mod verify;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, CommonArgs};
use commands::{Outcome, Status};
use config::RunConfig;
use error::CliResult;

/// Exit code when a check or comparison fails.
const EXIT_FAILED: u8 = 2;

fn run(cli: Cli) -> CliResult<Outcome> {
    let common: &CommonArgs = match &cli.command {
        Command::Stationary(a)
        | Command::Simulate(a)
        | Command::Partition(a)
        | Command::Matrix(a)
        | Command::Matrixmodel(a) => a,
        Command::Verify(v) => &v.common,
    };
    let cfg = RunConfig::from_args(common)?;
    let outcome = match &cli.command {
        Command::Stationary(_) => commands::stationary(&cfg)?,
        Command::Verify(v) => verify::verify(&cfg, v.perturb)?,
        Command::Simulate(_) => commands::simulate_cmd(&cfg)?,
        Command::Partition(_) => commands::partition(&cfg)?,
        Command::Matrix(_) => commands::matrix(&cfg)?,
        Command::Matrixmodel(_) => commands::matrix_model(&cfg)?,
    };
    output::emit(&outcome.text, common.out.as_deref())?;
    Ok(outcome)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(Outcome {
            status: Status::Pass, ..
        }) => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(EXIT_FAILED),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
