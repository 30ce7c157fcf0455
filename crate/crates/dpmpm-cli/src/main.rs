use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod config;
mod diagnose;
mod impute;
mod pool;
mod runs;
mod simulate;
mod synthesize;
mod tables;

#[derive(Parser)]
#[command(
    name = "dpmpm",
    version,
    about = "Latent-class imputation and synthesis for categorical data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fill missing cells m times from the fitted model
    Impute(impute::ImputeArgs),
    /// Replace chosen columns of fully observed data with model draws
    Synthesize(synthesize::SynthesizeArgs),
    /// Combine per-dataset estimates from released datasets
    Pool(pool::PoolArgs),
    /// Summarize a saved trace and compare released marginals
    Diagnose(diagnose::DiagnoseArgs),
    /// Draw fixture data from a known mixture
    Simulate(simulate::SimulateArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Impute(args) => impute::run(args),
        Command::Synthesize(args) => synthesize::run(args),
        Command::Pool(args) => pool::run(args),
        Command::Diagnose(args) => diagnose::run(args),
        Command::Simulate(args) => simulate::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
