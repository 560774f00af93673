//! `stepuq ingest`: parse annotated solutions into canonical step cases.

use crate::config::FileConfig;
use crate::errors::CliError;
use crate::manifest::write_manifest;
use clap::{Args, ValueEnum};
use serde::Serialize;
use std::io::BufRead;
use std::path::PathBuf;
use stepuq_core::ingest::{build_cases, prm800k, RawAnnotation, SubsetSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    /// One solution per line: {"id", "question", "steps": [{"text","rating"}]}.
    Canonical,
    /// PRM800K phase-2 records.
    Prm800k,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Line-delimited annotation file.
    #[arg(long)]
    pub input: PathBuf,
    /// Canonical step-case file to write.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "canonical")]
    pub format: InputFormat,
    /// Sample this many questions uniformly without replacement.
    #[arg(long, conflicts_with = "subset_ids")]
    pub subset_count: Option<usize>,
    /// File with one solution id per line to keep.
    #[arg(long)]
    pub subset_ids: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Abort on the first malformed record instead of skipping it.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Serialize)]
struct IngestReport<'a> {
    #[serde(flatten)]
    summary: &'a stepuq_core::ingest::IngestSummary,
    parse_skipped: usize,
}

/// Read annotations line by line, skipping or aborting on malformed lines.
fn read_annotations(
    args: &IngestArgs,
) -> Result<(Vec<RawAnnotation>, usize), CliError> {
    let file = std::fs::File::open(&args.input)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.input.display())))?;
    let reader = std::io::BufReader::new(file);
    let mut annotations = Vec::new();
    let mut skipped = 0usize;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| CliError::Data(format!("{}: {e}", args.input.display())))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: Result<RawAnnotation, String> = match args.format {
            InputFormat::Canonical => {
                serde_json::from_str::<RawAnnotation>(&line).map_err(|e| e.to_string())
            }
            InputFormat::Prm800k => {
                prm800k::convert_line(&line, line_no).map_err(|e| e.to_string())
            }
        };
        match parsed {
            Ok(mut a) => {
                if a.id.is_none() {
                    a.id = Some(format!("q{line_no:06}"));
                }
                annotations.push(a);
            }
            Err(reason) if args.strict => {
                return Err(CliError::Data(format!(
                    "{} line {line_no}: {reason}",
                    args.input.display()
                )));
            }
            Err(reason) => {
                log::warn!("{} line {line_no}: skipped: {reason}", args.input.display());
                skipped += 1;
            }
        }
    }
    Ok((annotations, skipped))
}

fn subset_spec(args: &IngestArgs) -> Result<SubsetSpec, CliError> {
    if let Some(path) = &args.subset_ids {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        let ids: Vec<String> = text
            .lines()
            .map(|l| l.trim().to_string())
            .filter(|l| !l.is_empty())
            .collect();
        if ids.is_empty() {
            return Err(CliError::Usage(format!(
                "{}: subset id list is empty",
                path.display()
            )));
        }
        return Ok(SubsetSpec::Ids(ids));
    }
    Ok(match args.subset_count {
        Some(n) => SubsetSpec::Count(n),
        None => SubsetSpec::All,
    })
}

pub fn run(args: &IngestArgs) -> Result<(), CliError> {
    let file_cfg = FileConfig::load(args.config.as_deref())?;
    let seed = args.seed.or(file_cfg.seed).unwrap_or(0);

    let (annotations, parse_skipped) = read_annotations(args)?;
    let subset = subset_spec(args)?;
    let (cases, mut summary) = build_cases(&annotations, &subset, seed, args.strict)?;
    summary.skipped += parse_skipped;

    if let Some(dir) = args.out.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    stepuq_core::io::write_jsonl(&args.out, &cases)?;

    let summary_path = args.out.with_extension("summary.json");
    let report = IngestReport {
        summary: &summary,
        parse_skipped,
    };
    std::fs::write(
        &summary_path,
        serde_json::to_string_pretty(&report)? + "\n",
    )?;

    crate::commands::print_ingest_summary(&summary);

    let manifest_dir = args
        .out
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .map(|d| d.to_path_buf())
        .unwrap_or_else(|| PathBuf::from("."));
    write_manifest(
        &manifest_dir,
        "ingest",
        seed,
        serde_json::json!({
            "format": format!("{:?}", args.format),
            "strict": args.strict,
            "subset": format!("{subset:?}"),
        }),
        std::slice::from_ref(&args.input),
        &[args.out.clone(), summary_path],
    )?;
    Ok(())
}
