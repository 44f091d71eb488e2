mod args;
mod commands;
mod error;
mod ingest;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CPHMM_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Fit(m) => commands::fit(m),
        Command::Posterior(m) => commands::posterior(m),
        Command::Sample {
            model,
            count,
            seed,
            direction,
        } => commands::sample(model, *count, *seed, (*direction).into()),
        Command::Viterbi(m) => commands::viterbi_path(m),
        Command::Verify { model, budget } => commands::verify(model, *budget),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cphmm: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
