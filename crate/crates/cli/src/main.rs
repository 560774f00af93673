//! Step-wise verification uncertainty pipeline CLI.
//!
//! Subcommands wire the stages together: simulate or ingest a corpus, sample
//! the judge, estimate uncertainty, evaluate against correctness, and render
//! reports. Exit codes: 0 success, 1 usage error, 2 data error, 3 transport
//! error.

mod commands;
mod config;
mod errors;
mod manifest;
mod svg;

use clap::{Parser, Subcommand};
use commands::{estimate, evaluate, ingest, report, sample, simulate};
use errors::CliError;

#[derive(Parser)]
#[command(name = "stepuq", version, about = "Uncertainty-aware step-wise verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus with a controllable judge.
    Simulate(simulate::SimulateArgs),
    /// Parse annotated solutions into canonical step cases.
    Ingest(ingest::IngestArgs),
    /// Sample the judge over pending cases into a resumable store.
    Sample(sample::SampleArgs),
    /// Compute uncertainty records for the selected estimators.
    Estimate(estimate::EstimateArgs),
    /// Score uncertainty records against verification correctness.
    Evaluate(evaluate::EvaluateArgs),
    /// Render the evaluation report as CSV and an SVG plot.
    Report(report::ReportArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(args) => simulate::run(&args),
        Command::Ingest(args) => ingest::run(&args),
        Command::Sample(args) => sample::run(&args),
        Command::Estimate(args) => estimate::run(&args),
        Command::Evaluate(args) => evaluate::run(&args),
        Command::Report(args) => report::run(&args),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.code());
    }
}
