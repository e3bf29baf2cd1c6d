mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

/// Outcome of a subcommand that ran to completion.
pub enum Status {
    Success,
    NoResult,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 2,
            });
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(4);
        }
    }
    let out = output::Sink::stdout(cli.format);
    let result = match &cli.command {
        Command::SolveOmega(a) => commands::solve_omega(a, out),
        Command::Scan(a) => commands::scan(a, out),
        Command::Universality(a) => commands::universality(a, out),
        Command::Zeros(a) => commands::zeros(a, out),
        Command::Mollifier(a) => commands::mollifier(a, cli.seed, out),
        Command::ZetaEval(a) => commands::zeta_eval(a, out),
        Command::Calibrate(a) => commands::calibrate(a, out),
    };
    match result {
        Ok(Status::Success) => ExitCode::SUCCESS,
        Ok(Status::NoResult) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
