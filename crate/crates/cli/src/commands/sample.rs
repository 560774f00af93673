//! `stepuq sample`: drive the judge over every pending step case, writing a
//! resumable append-only store.

use crate::config::{overlay, overlay_clone, FileConfig};
use crate::errors::CliError;
use crate::manifest::write_manifest;
use clap::Args;
use serde::Serialize;
use std::collections::BTreeSet;
use std::path::PathBuf;
use stepuq_core::io::JsonlAppender;
use stepuq_core::judge::client::{HttpJudgeClient, JudgeClient, MockJudgeClient};
use stepuq_core::judge::{sample_step, JudgeConfig, SampleError};
use stepuq_core::types::{StepCase, StepVerification};

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Canonical step-case file.
    #[arg(long)]
    pub cases: PathBuf,
    /// Sample store to append to; existing case ids are skipped.
    #[arg(long)]
    pub store: PathBuf,
    /// Scripted response file; replaces the wire client.
    #[arg(long)]
    pub mock: Option<PathBuf>,
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub n_diverse: Option<u32>,
    #[arg(long)]
    pub t_greedy: Option<f64>,
    #[arg(long)]
    pub t_diverse: Option<f64>,
    #[arg(long)]
    pub max_concurrent: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Serialize)]
struct SampleStats {
    cases_total: usize,
    skipped_existing: usize,
    sampled: usize,
    failed: usize,
    mean_parse_rate: f64,
}

fn resolve_judge_config(args: &SampleArgs) -> Result<(JudgeConfig, u64), CliError> {
    let file = FileConfig::load(args.config.as_deref())?;
    let mut cfg = file.judge;
    overlay_clone(&mut cfg.endpoint, args.endpoint.as_ref());
    overlay_clone(&mut cfg.model, args.model.as_ref());
    overlay(&mut cfg.n_diverse, args.n_diverse);
    overlay(&mut cfg.t_greedy, args.t_greedy);
    overlay(&mut cfg.t_diverse, args.t_diverse);
    overlay(&mut cfg.max_concurrent_requests, args.max_concurrent);
    cfg.validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let seed = args.seed.or(file.seed).unwrap_or(0);
    Ok((cfg, seed))
}

fn parse_rate(v: &StepVerification) -> f64 {
    let total = 1 + v.diverse_samples.len();
    let ok = v.diverse_samples.iter().filter(|s| s.parse_ok).count()
        + v.greedy_sample.parse_ok as usize;
    ok as f64 / total as f64
}

pub fn run(args: &SampleArgs) -> Result<(), CliError> {
    let (cfg, seed) = resolve_judge_config(args)?;
    if args.mock.is_none() && cfg.endpoint.is_empty() {
        return Err(CliError::Usage(
            "either --mock or an endpoint (flag or config) is required".to_string(),
        ));
    }

    let cases = crate::commands::load_cases(&args.cases)?;
    let existing: BTreeSet<String> = if args.store.exists() {
        let store: Vec<StepVerification> = stepuq_core::io::read_jsonl(&args.store)?;
        store.into_iter().map(|v| v.case_id).collect()
    } else {
        BTreeSet::new()
    };
    let pending: Vec<&StepCase> = cases
        .iter()
        .filter(|c| !existing.contains(&c.case_id))
        .collect();

    let client: Box<dyn JudgeClient> = match &args.mock {
        Some(path) => Box::new(MockJudgeClient::from_path(path).map_err(CliError::from)?),
        None => Box::new(HttpJudgeClient::new(&cfg).map_err(CliError::from)?),
    };

    let mut stats = SampleStats {
        cases_total: cases.len(),
        skipped_existing: existing.len(),
        sampled: 0,
        failed: 0,
        mean_parse_rate: 0.0,
    };

    if pending.is_empty() {
        println!("nothing to sample: all {} cases present", cases.len());
    } else {
        // The first pending case runs before the store is touched, so an
        // unreachable endpoint fails fast without any writes.
        let first = sample_step(pending[0], &cfg, client.as_ref())?;

        let mut appender = JsonlAppender::open(&args.store)?;
        let mut parse_rate_sum = parse_rate(&first);
        appender.append(&first)?;
        appender.flush()?;
        stats.sampled = 1;

        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.max_concurrent_requests as usize)
            .build()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        for chunk in pending[1..].chunks(64) {
            let results: Vec<Result<StepVerification, SampleError>> = pool.install(|| {
                use rayon::prelude::*;
                chunk
                    .par_iter()
                    .map(|case| sample_step(case, &cfg, client.as_ref()))
                    .collect()
            });
            for result in results {
                match result {
                    Ok(v) => {
                        parse_rate_sum += parse_rate(&v);
                        appender.append(&v)?;
                        stats.sampled += 1;
                    }
                    Err(e) => {
                        log::warn!("{e}");
                        stats.failed += 1;
                    }
                }
            }
            appender.flush()?;
        }
        stats.mean_parse_rate = parse_rate_sum / stats.sampled as f64;

        if stats.sampled == 1 && stats.failed == pending.len() - 1 && stats.failed > 0 {
            return Err(CliError::Transport(format!(
                "{} of {} steps failed",
                stats.failed,
                pending.len()
            )));
        }
    }

    println!(
        "sampled {} steps ({} already present, {} failed), mean parse rate {:.3}",
        stats.sampled, stats.skipped_existing, stats.failed, stats.mean_parse_rate
    );

    let stats_path = args.store.with_extension("stats.json");
    std::fs::write(&stats_path, serde_json::to_string_pretty(&stats)? + "\n")?;

    let manifest_dir = args
        .store
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .map(|d| d.to_path_buf())
        .unwrap_or_else(|| PathBuf::from("."));
    let mut inputs = vec![args.cases.clone()];
    if let Some(mock) = &args.mock {
        inputs.push(mock.clone());
    }
    write_manifest(
        &manifest_dir,
        "sample",
        seed,
        serde_json::to_value(&cfg)?,
        &inputs,
        &[args.store.clone(), stats_path],
    )?;
    Ok(())
}
