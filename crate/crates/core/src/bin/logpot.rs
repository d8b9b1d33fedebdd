use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use logpot::cli::{run, Cli, Status};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("LOGPOT_LOG", "warn")).init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(Status::Usage.code())
            } else {
                ExitCode::SUCCESS
            };
        }
    };

    match run(&cli).context("logpot failed") {
        Ok(status) => ExitCode::from(status.code()),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(Status::Usage.code())
        }
    }
}
