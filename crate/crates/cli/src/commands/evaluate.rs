//! `stepuq evaluate`: score uncertainty records against verification
//! correctness and write the evaluation report.

use crate::config::FileConfig;
use crate::errors::CliError;
use crate::manifest::write_manifest;
use clap::Args;
use std::path::PathBuf;
use stepuq_core::metrics::{build_eval_report, internal_coverage_grid};
use stepuq_core::types::UncertaintyRecord;

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub cases: PathBuf,
    #[arg(long)]
    pub store: PathBuf,
    #[arg(long)]
    pub records: PathBuf,
    /// Evaluation report (JSON) to write.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
}

fn fmt(metric: Option<stepuq_core::types::MetricSummary>) -> String {
    match metric {
        Some(m) => format!("{:.3}±{:.3}", m.mean, m.std),
        None => "undefined".to_string(),
    }
}

pub fn run(args: &EvaluateArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.config.as_deref())?;
    let seed = args.seed.or(file.seed).unwrap_or(0);

    let cases = crate::commands::load_cases(&args.cases)?;
    let store = crate::commands::load_store(&args.store)?;
    let records: Vec<UncertaintyRecord> = stepuq_core::io::read_jsonl(&args.records)?;
    if records.is_empty() {
        return Err(CliError::Data(format!(
            "{}: no uncertainty records found",
            args.records.display()
        )));
    }

    let report = build_eval_report(&cases, &store, &records, seed, &internal_coverage_grid())?;

    println!(
        "steps: {}  accuracy: {:.3}  f1: {:.3}  positive rate: {:.3}",
        report.global.n_steps,
        report.global.verification_accuracy,
        report.global.verification_f1,
        report.global.positive_rate
    );
    println!("{:<22} {:>12} {:>12} {:>12} {:>6}", "estimator", "AUROC", "AUPRC", "AU-F1C", "n");
    for est in &report.estimators {
        println!(
            "{:<22} {:>12} {:>12} {:>12} {:>6}",
            est.estimator.to_string(),
            fmt(est.auroc),
            fmt(est.auprc),
            fmt(est.au_f1c),
            est.n_used
        );
    }

    if let Some(dir) = args.out.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    std::fs::write(&args.out, serde_json::to_string_pretty(&report)? + "\n")?;

    let manifest_dir = args
        .out
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .map(|d| d.to_path_buf())
        .unwrap_or_else(|| PathBuf::from("."));
    write_manifest(
        &manifest_dir,
        "evaluate",
        seed,
        serde_json::json!({"grid": "30..=100 step 2"}),
        &[args.cases.clone(), args.store.clone(), args.records.clone()],
        std::slice::from_ref(&args.out),
    )?;
    Ok(())
}
