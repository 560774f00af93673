//! Subcommand implementations.

pub mod estimate;
pub mod evaluate;
pub mod ingest;
pub mod report;
pub mod sample;
pub mod simulate;

use crate::errors::CliError;
use std::path::Path;
use stepuq_core::types::{StepCase, StepVerification};

pub fn load_cases(path: &Path) -> Result<Vec<StepCase>, CliError> {
    let cases: Vec<StepCase> = stepuq_core::io::read_jsonl(path)?;
    if cases.is_empty() {
        return Err(CliError::Data(format!(
            "{}: no step cases found",
            path.display()
        )));
    }
    Ok(cases)
}

pub fn load_store(path: &Path) -> Result<Vec<StepVerification>, CliError> {
    let store: Vec<StepVerification> = stepuq_core::io::read_jsonl(path)?;
    if store.is_empty() {
        return Err(CliError::Data(format!(
            "{}: no step verifications found",
            path.display()
        )));
    }
    Ok(store)
}

pub fn print_ingest_summary(summary: &stepuq_core::ingest::IngestSummary) {
    println!("questions: {}", summary.questions);
    println!("steps: {}", summary.steps);
    println!(
        "positives: {} ({:.1}%)",
        summary.positives,
        summary.positive_rate * 100.0
    );
    println!(
        "mean steps per solution: {:.1}",
        summary.mean_steps_per_solution
    );
    if summary.skipped > 0 {
        println!("skipped malformed solutions: {}", summary.skipped);
    }
}
