//! `ckm`: candidate-list clustering from the command line.
//!
//! Exit codes: 0 success, 2 invalid configuration, 3 infeasible constraint,
//! 4 I/O failure, 5 verification rate below `--min-rate`.

mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::Failure;

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Failure::config("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::config(e.to_string()))?;
    }
    match &cli.command {
        Command::Solve(a) => commands::solve(a, cli.verbose),
        Command::List(a) => commands::list(a, cli.verbose),
        Command::Verify(a) => commands::verify(a, cli.verbose),
        Command::Lowerbound(a) => commands::lowerbound(a),
        Command::Bench(a) => commands::bench(a, cli.verbose),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
