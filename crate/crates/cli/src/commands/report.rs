//! `stepuq report`: render the evaluation report as a flat CSV and a
//! rejection-curve plot.

use crate::errors::CliError;
use crate::manifest::write_manifest;
use crate::svg::rejection_curve_svg;
use clap::Args;
use std::path::PathBuf;
use stepuq_core::metrics::display_coverage_grid;
use stepuq_core::types::{EvalReport, MetricSummary};

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Evaluation report written by `evaluate`.
    #[arg(long)]
    pub report: PathBuf,
    /// Directory receiving report.csv and rejection_curves.svg.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
}

fn metric_cell(m: Option<MetricSummary>) -> (String, String) {
    match m {
        Some(m) => (format!("{:.6}", m.mean), format!("{:.6}", m.std)),
        None => ("NA".to_string(), "NA".to_string()),
    }
}

/// CSV rows: one per estimator and metric, one per displayed curve point,
/// plus three corpus-level rows.
pub fn render_csv(report: &EvalReport, display: &[f64]) -> String {
    let mut out = String::from("kind,estimator,metric,coverage,value,std,n\n");
    for est in &report.estimators {
        for (name, value) in [
            ("auroc", est.auroc),
            ("auprc", est.auprc),
            ("au_f1c", est.au_f1c),
        ] {
            let (mean, std) = metric_cell(value);
            out.push_str(&format!(
                "metric,{},{name},,{mean},{std},{}\n",
                est.estimator, est.n_used
            ));
        }
    }
    for est in &report.estimators {
        for point in &est.rejection_curve {
            let pct = (point.coverage * 100.0).round() as i64;
            if !display.iter().any(|d| (d * 100.0).round() as i64 == pct) {
                continue;
            }
            out.push_str(&format!(
                "curve,{},rejection_f1,{:.2},{:.6},{:.6},{}\n",
                est.estimator, point.coverage, point.f1, point.f1_std, point.n_retained
            ));
        }
    }
    let g = &report.global;
    out.push_str(&format!(
        "global,corpus,verification_accuracy,,{:.6},0.000000,{}\n",
        g.verification_accuracy, g.n_steps
    ));
    out.push_str(&format!(
        "global,corpus,verification_f1,,{:.6},0.000000,{}\n",
        g.verification_f1, g.n_steps
    ));
    out.push_str(&format!(
        "global,corpus,positive_rate,,{:.6},0.000000,{}\n",
        g.positive_rate, g.n_steps
    ));
    out
}

pub fn run(args: &ReportArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.report)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.report.display())))?;
    let report: EvalReport = serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.report.display())))?;

    std::fs::create_dir_all(&args.out_dir)?;
    let display = display_coverage_grid();

    let csv_path = args.out_dir.join("report.csv");
    std::fs::write(&csv_path, render_csv(&report, &display))?;

    let svg_path = args.out_dir.join("rejection_curves.svg");
    std::fs::write(&svg_path, rejection_curve_svg(&report, &display))?;

    println!(
        "wrote {} and {}",
        csv_path.display(),
        svg_path.display()
    );

    write_manifest(
        &args.out_dir,
        "report",
        args.seed.unwrap_or(0),
        serde_json::json!({"display_grid": "60..=100 step 4"}),
        std::slice::from_ref(&args.report),
        &[csv_path, svg_path],
    )?;
    Ok(())
}
