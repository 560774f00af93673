//! `stepuq simulate`: emit a synthetic corpus that replays through the rest
//! of the pipeline byte for byte.

use crate::config::{overlay, FileConfig};
use crate::errors::CliError;
use crate::manifest::write_manifest;
use clap::Args;
use std::path::PathBuf;
use stepuq_core::simulator::{generate_corpus, SimConfig};

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// TOML config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory receiving raw.jsonl, cases.jsonl, samples.jsonl,
    /// responses.jsonl and embeddings.jsonl.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub questions: Option<usize>,
    #[arg(long)]
    pub error_rate: Option<f64>,
    #[arg(long)]
    pub judge_skill: Option<f64>,
    #[arg(long)]
    pub concentration: Option<f64>,
    #[arg(long)]
    pub n_diverse: Option<u32>,
    #[arg(long)]
    pub max_steps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn resolve_config(args: &SimulateArgs) -> Result<SimConfig, CliError> {
    let file = FileConfig::load(args.config.as_deref())?;
    let mut cfg = file.simulator;
    if let Some(seed) = file.seed {
        cfg.seed = seed;
    }
    overlay(&mut cfg.n_questions, args.questions);
    overlay(&mut cfg.step_error_rate, args.error_rate);
    overlay(&mut cfg.judge_skill, args.judge_skill);
    overlay(&mut cfg.belief_concentration, args.concentration);
    overlay(&mut cfg.n_diverse, args.n_diverse);
    overlay(&mut cfg.max_steps, args.max_steps);
    overlay(&mut cfg.seed, args.seed);
    cfg.validate().map_err(CliError::Usage)?;
    Ok(cfg)
}

pub fn run(args: &SimulateArgs) -> Result<(), CliError> {
    let cfg = resolve_config(args)?;
    std::fs::create_dir_all(&args.out_dir)?;
    let corpus = generate_corpus(&cfg);

    let raw = args.out_dir.join("raw.jsonl");
    let cases = args.out_dir.join("cases.jsonl");
    let samples = args.out_dir.join("samples.jsonl");
    let responses = args.out_dir.join("responses.jsonl");
    let embeddings = args.out_dir.join("embeddings.jsonl");

    stepuq_core::io::write_jsonl(&raw, &corpus.raw)?;
    stepuq_core::io::write_jsonl(&cases, &corpus.cases)?;
    stepuq_core::io::write_jsonl(&samples, &corpus.verifications)?;
    stepuq_core::io::write_jsonl(&responses, &corpus.scripted)?;
    stepuq_core::io::write_jsonl(&embeddings, &corpus.embeddings)?;

    crate::commands::print_ingest_summary(&corpus.summary);

    write_manifest(
        &args.out_dir,
        "simulate",
        cfg.seed,
        serde_json::to_value(&cfg)?,
        &[],
        &[raw, cases, samples, responses, embeddings],
    )?;
    Ok(())
}
