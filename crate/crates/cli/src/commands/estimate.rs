//! `stepuq estimate`: compute uncertainty records for the selected estimator
//! set over a sample store.

use crate::config::{overlay_clone, FileConfig};
use crate::errors::CliError;
use crate::manifest::write_manifest;
use clap::Args;
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::PathBuf;
use stepuq_core::estimators::embed::{HttpEmbedder, ScriptedEmbedder, SentenceEmbedder};
use stepuq_core::estimators::{estimate_step, EstimateContext, Unavailable};
use stepuq_core::judge::client::{HttpJudgeClient, JudgeClient, MockJudgeClient};
use stepuq_core::judge::JudgeConfig;
use stepuq_core::types::{EstimatorId, StepCase, UncertaintyRecord};

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub cases: PathBuf,
    #[arg(long)]
    pub store: PathBuf,
    /// Uncertainty record file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated estimator ids; defaults to every estimator.
    #[arg(long, value_delimiter = ',')]
    pub estimators: Vec<String>,
    /// Scripted embeddings for seu.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Scripted responses for p_true.
    #[arg(long)]
    pub mock: Option<PathBuf>,
    /// Judge endpoint for p_true when not mocked.
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Serialize)]
struct EstimatorStats {
    estimator: EstimatorId,
    scored: usize,
    excluded: usize,
    skip_reason: Option<String>,
}

fn selected_estimators(args: &EstimateArgs) -> Result<Vec<EstimatorId>, CliError> {
    if args.estimators.is_empty() {
        return Ok(EstimatorId::ALL.to_vec());
    }
    args.estimators
        .iter()
        .map(|name| {
            EstimatorId::parse(name.trim())
                .ok_or_else(|| CliError::Usage(format!("unknown estimator {name:?}")))
        })
        .collect()
}

pub fn run(args: &EstimateArgs) -> Result<(), CliError> {
    let file = FileConfig::load(args.config.as_deref())?;
    let seed = args.seed.or(file.seed).unwrap_or(0);
    let mut judge_cfg: JudgeConfig = file.judge.clone();
    overlay_clone(&mut judge_cfg.endpoint, args.endpoint.as_ref());
    overlay_clone(&mut judge_cfg.model, args.model.as_ref());

    let estimators = selected_estimators(args)?;
    let cases = crate::commands::load_cases(&args.cases)?;
    let store = crate::commands::load_store(&args.store)?;
    let by_id: BTreeMap<&str, &StepCase> = cases.iter().map(|c| (c.case_id.as_str(), c)).collect();

    let embedder: Option<Box<dyn SentenceEmbedder>> = match (&args.embeddings, &file.embeddings) {
        (Some(path), _) => Some(Box::new(
            ScriptedEmbedder::from_path(path).map_err(|e| CliError::Data(e.to_string()))?,
        )),
        (None, emb) if !emb.endpoint.is_empty() => Some(Box::new(
            HttpEmbedder::new(emb.endpoint.clone(), emb.model.clone(), emb.request_timeout_secs)
                .map_err(|e| CliError::Transport(e.to_string()))?,
        )),
        _ => None,
    };
    let judge: Option<Box<dyn JudgeClient>> = match &args.mock {
        Some(path) => Some(Box::new(
            MockJudgeClient::from_path(path).map_err(CliError::from)?,
        )),
        None if !judge_cfg.endpoint.is_empty() => {
            Some(Box::new(HttpJudgeClient::new(&judge_cfg).map_err(CliError::from)?))
        }
        None => None,
    };
    let ctx = EstimateContext {
        seed,
        embedder: embedder.as_deref(),
        judge: judge.as_deref().map(|j| (j, &judge_cfg)),
    };

    let joined: Vec<(&StepCase, &stepuq_core::types::StepVerification)> = store
        .iter()
        .map(|verification| {
            by_id
                .get(verification.case_id.as_str())
                .map(|case| (*case, verification))
                .ok_or_else(|| {
                    CliError::Data(format!(
                        "store case {} has no matching step case",
                        verification.case_id
                    ))
                })
        })
        .collect::<Result<_, _>>()?;

    // Per-step scoring is pure and the clients are shareable, so steps run in
    // parallel under the judge concurrency budget; results fold in step order.
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(judge_cfg.max_concurrent_requests.max(1) as usize)
        .build()
        .map_err(|e| CliError::Usage(e.to_string()))?;

    let mut records: Vec<UncertaintyRecord> = Vec::new();
    let mut stats: Vec<EstimatorStats> = Vec::new();
    for estimator in estimators {
        // A missing backend skips the whole estimator; the run continues.
        let skip_reason = match estimator {
            EstimatorId::Seu if ctx.embedder.is_none() => {
                Some(Unavailable::NoEmbedder.to_string())
            }
            EstimatorId::PTrue if ctx.judge.is_none() => {
                Some(Unavailable::NoJudgeClient.to_string())
            }
            _ => None,
        };
        if let Some(reason) = &skip_reason {
            println!("skipping {estimator}: {reason}");
            stats.push(EstimatorStats {
                estimator,
                scored: 0,
                excluded: 0,
                skip_reason,
            });
            continue;
        }

        let results: Vec<_> = pool.install(|| {
            use rayon::prelude::*;
            joined
                .par_iter()
                .map(|(case, verification)| estimate_step(estimator, case, verification, &ctx))
                .collect()
        });

        let mut scored = 0usize;
        let mut excluded = 0usize;
        for ((_, verification), result) in joined.iter().zip(results) {
            match result {
                Ok(score) => {
                    scored += 1;
                    records.push(UncertaintyRecord {
                        case_id: verification.case_id.clone(),
                        estimator,
                        score: score.score,
                        n_samples_used: score.n_samples_used,
                    });
                }
                Err(e) => {
                    log::warn!("{}: {} unavailable: {e}", verification.case_id, estimator);
                    excluded += 1;
                }
            }
        }
        println!("{estimator}: scored {scored}, excluded {excluded}");
        stats.push(EstimatorStats {
            estimator,
            scored,
            excluded,
            skip_reason: None,
        });
    }

    if let Some(dir) = args.out.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    stepuq_core::io::write_jsonl(&args.out, &records)?;
    let stats_path = args.out.with_extension("stats.json");
    std::fs::write(&stats_path, serde_json::to_string_pretty(&stats)? + "\n")?;

    let manifest_dir = args
        .out
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .map(|d| d.to_path_buf())
        .unwrap_or_else(|| PathBuf::from("."));
    let mut inputs = vec![args.cases.clone(), args.store.clone()];
    if let Some(p) = &args.embeddings {
        inputs.push(p.clone());
    }
    if let Some(p) = &args.mock {
        inputs.push(p.clone());
    }
    write_manifest(
        &manifest_dir,
        "estimate",
        seed,
        serde_json::to_value(&judge_cfg)?,
        &inputs,
        &[args.out.clone(), stats_path],
    )?;
    Ok(())
}
