mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::RunContext;

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let ctx = RunContext {
        wall_time: cli.wall_time,
    };
    match &cli.command {
        Command::Validate(a) => commands::validate(a),
        Command::Analyze(a) => commands::analyze(a, &ctx),
        Command::Simulate(a) => commands::simulate(a, &ctx),
        Command::Optimize(a) => commands::run_optimize(a, &ctx),
        Command::Sweep(a) => commands::sweep(a, &ctx),
        Command::Crossval(a) => commands::crossval(a, &ctx),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
