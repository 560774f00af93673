//! Synthetic-judge corpus generator.
//!
//! Produces annotated solutions, scripted judge responses, and embeddings for
//! an imaginary judge with controllable skill, then runs the real ingest and
//! sampling code over its own mock transcripts. Trace lengths follow the
//! geometric first-error model truncated at a maximum length. Per step, a
//! latent correct-judgment probability is drawn from a Beta centered at
//! `judge_skill`; each sample then decides correctly with that probability
//! and backs its decision with a Beta-distributed token confidence, which is
//! what drives rationale disagreement and per-rationale indecision apart.
//!
//! Steps are opaque tokens with labels; no mathematical content is modelled.

use crate::estimators::embed::{ScriptedEmbedder, ScriptedEmbedding, SentenceEmbedder};
use crate::estimators::{estimate_step, EstimateContext};
use crate::ingest::{build_cases, IngestSummary, RawAnnotation, RawStep, SubsetSpec};
use crate::judge::client::{MockJudgeClient, SampleSlot, ScriptedResponse, TokenLogProb};
use crate::judge::{sample_step, JudgeConfig};
use crate::metrics::{self, ScoredStep};
use crate::types::{EstimatorId, Label, PredictiveDistribution, StepCase, StepVerification};
use rand::distributions::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::Beta;
use std::collections::BTreeMap;

/// Simulator configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub n_questions: usize,
    /// Per-step probability that the step introduces the first error.
    pub step_error_rate: f64,
    /// Mean of the latent per-step correct-judgment probability.
    pub judge_skill: f64,
    /// Concentration of the latent Beta draws and of per-sample confidences.
    pub belief_concentration: f64,
    pub n_diverse: u32,
    /// Traces without an error stop at this length.
    pub max_steps: usize,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_questions: 100,
            step_error_rate: 0.12,
            judge_skill: 0.85,
            belief_concentration: 4.0,
            n_diverse: 10,
            max_steps: 10,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.step_error_rate) {
            return Err("step_error_rate must lie in [0, 1]".to_string());
        }
        if !(0.0..=1.0).contains(&self.judge_skill) {
            return Err("judge_skill must lie in [0, 1]".to_string());
        }
        if self.belief_concentration.is_nan() || self.belief_concentration <= 0.0 {
            return Err("belief_concentration must be > 0".to_string());
        }
        if self.n_questions == 0 || self.max_steps == 0 || self.n_diverse == 0 {
            return Err("n_questions, max_steps and n_diverse must be >= 1".to_string());
        }
        Ok(())
    }
}

/// Everything one simulated run produces. The scripted responses and
/// embeddings replay through the mock clients to reproduce `verifications`
/// byte for byte.
#[derive(Debug, Clone)]
pub struct SimCorpus {
    pub raw: Vec<RawAnnotation>,
    pub cases: Vec<StepCase>,
    pub verifications: Vec<StepVerification>,
    pub scripted: Vec<ScriptedResponse>,
    pub embeddings: Vec<ScriptedEmbedding>,
    pub summary: IngestSummary,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D049BB133111EB);
    x ^ (x >> 31)
}

fn sub_rng(seed: u64, tag: u64, a: u64, b: u64) -> ChaCha8Rng {
    let mixed = splitmix64(splitmix64(splitmix64(seed ^ tag) ^ a) ^ b);
    ChaCha8Rng::seed_from_u64(mixed)
}

/// Beta draw parameterized by mean and concentration; degenerate means and
/// infinite concentration resolve analytically.
fn beta_mean_conc(rng: &mut ChaCha8Rng, mean: f64, concentration: f64) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    if mean >= 1.0 {
        return 1.0;
    }
    if concentration.is_infinite() {
        return mean;
    }
    let beta = Beta::new(mean * concentration, (1.0 - mean) * concentration)
        .expect("positive Beta parameters");
    beta.sample(rng)
}

/// Confidence the sample places on its own decision: Beta(k, 1), sharpening
/// toward 1 as the concentration grows.
fn own_confidence(rng: &mut ChaCha8Rng, concentration: f64) -> f64 {
    let raw = if concentration.is_infinite() {
        1.0
    } else {
        Beta::new(concentration, 1.0)
            .expect("positive Beta parameters")
            .sample(rng)
    };
    raw.clamp(1e-6, 1.0 - 1e-6)
}

fn rationale_text(decision: Label) -> String {
    match decision {
        Label::Error => "cluster c1: the proposed step looks wrong".to_string(),
        Label::NoError => "cluster c0: the proposed step looks sound".to_string(),
    }
}

/// Scripted verdict response: a JSON record split into three tokens so the
/// decision word is its own token, with both class masses in its top-k and
/// a uniform per-token log probability.
fn verdict_response(
    case_id: &str,
    slot: SampleSlot,
    decision: Label,
    confidence: f64,
) -> ScriptedResponse {
    let rationale = rationale_text(decision);
    let rationale_json = serde_json::to_string(&rationale).expect("string serializes");
    let prefix = format!("{{\"reasoning\": {rationale_json}, \"has_error\": \"");
    let word = decision.as_word();
    let suffix = "\"}".to_string();

    let p_yes = match decision {
        Label::Error => confidence,
        Label::NoError => 1.0 - confidence,
    };
    let lp = confidence.ln();
    let top = vec![
        ("yes".to_string(), p_yes.ln()),
        ("no".to_string(), (1.0 - p_yes).ln()),
    ];
    let tokens = vec![
        TokenLogProb {
            token: prefix.clone(),
            logprob: lp,
            top: vec![],
        },
        TokenLogProb {
            token: word.to_string(),
            logprob: lp,
            top,
        },
        TokenLogProb {
            token: suffix.clone(),
            logprob: lp,
            top: vec![],
        },
    ];
    ScriptedResponse {
        case_id: case_id.to_string(),
        slot,
        text: format!("{prefix}{word}{suffix}"),
        tokens,
    }
}

fn ptrue_response(case_id: &str, rng: &mut ChaCha8Rng, agreement: f64, concentration: f64) -> ScriptedResponse {
    let centered = agreement.clamp(0.02, 0.98);
    let p_true = beta_mean_conc(rng, centered, concentration).clamp(1e-4, 1.0 - 1e-4);
    let word = if rng.gen_bool(p_true) { "True" } else { "False" };
    let own = if word == "True" { p_true } else { 1.0 - p_true };
    let tokens = vec![TokenLogProb {
        token: word.to_string(),
        logprob: own.ln(),
        top: vec![
            ("True".to_string(), p_true.ln()),
            ("False".to_string(), (1.0 - p_true).ln()),
        ],
    }];
    ScriptedResponse {
        case_id: case_id.to_string(),
        slot: SampleSlot::PTrue,
        text: word.to_string(),
        tokens,
    }
}

/// Generate only the annotated solutions (cheap; no judge simulation).
pub fn generate_raw(cfg: &SimConfig) -> Vec<RawAnnotation> {
    (0..cfg.n_questions)
        .map(|qi| {
            let mut rng = sub_rng(cfg.seed, 1, qi as u64, 0);
            let mut steps = Vec::new();
            for t in 1..=cfg.max_steps {
                let is_error = rng.gen_bool(cfg.step_error_rate);
                let rating = if is_error {
                    -1
                } else if rng.gen_bool(0.2) {
                    0
                } else {
                    1
                };
                steps.push(RawStep {
                    text: format!("proposed step {t} for problem {qi}"),
                    rating,
                });
                if is_error {
                    break;
                }
            }
            RawAnnotation {
                id: Some(format!("sim-{qi:05}")),
                question: format!("Synthetic problem {qi}: verify each proposed step."),
                steps,
            }
        })
        .collect()
}

fn basis_vector(decision: Label) -> Vec<f64> {
    match decision {
        Label::NoError => vec![1.0, 0.0, 0.0, 0.0],
        Label::Error => vec![0.0, 1.0, 0.0, 0.0],
    }
}

/// Generate a full corpus: cases, scripted transcripts, embeddings, and the
/// verifications obtained by replaying the transcripts through the real
/// sampling code. Fully deterministic per seed.
pub fn generate_corpus(cfg: &SimConfig) -> SimCorpus {
    cfg.validate().expect("valid simulator config");
    let raw = generate_raw(cfg);
    let (cases, summary) =
        build_cases(&raw, &SubsetSpec::All, cfg.seed, true).expect("simulator emits well-formed annotations");

    let mut scripted = Vec::new();
    let mut embeddings: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for case in &cases {
        let qi: u64 = case
            .solution_id
            .strip_prefix("sim-")
            .and_then(|s| s.parse().ok())
            .expect("simulator solution ids are sim-<n>");
        let mut rng = sub_rng(cfg.seed, 2, qi, case.step_index as u64);

        let latent_correct = beta_mean_conc(&mut rng, cfg.judge_skill, cfg.belief_concentration);

        let decide = |rng: &mut ChaCha8Rng| -> Label {
            let correct = rng.gen_bool(latent_correct);
            if correct {
                case.ground_truth
            } else {
                match case.ground_truth {
                    Label::Error => Label::NoError,
                    Label::NoError => Label::Error,
                }
            }
        };

        let greedy_decision = decide(&mut rng);
        // Greedy runs cold: its confidence never drops below one half, so the
        // emitted word agrees with its own class argmax.
        let greedy_conf = 0.5 + own_confidence(&mut rng, cfg.belief_concentration) / 2.0;
        scripted.push(verdict_response(
            &case.case_id,
            SampleSlot::Greedy,
            greedy_decision,
            greedy_conf,
        ));

        let mut diverse_decisions = Vec::with_capacity(cfg.n_diverse as usize);
        for i in 0..cfg.n_diverse {
            let decision = decide(&mut rng);
            let confidence = own_confidence(&mut rng, cfg.belief_concentration);
            let resp = verdict_response(&case.case_id, SampleSlot::Diverse(i), decision, confidence);
            scripted.push(resp);
            diverse_decisions.push(decision);

            let rationale = rationale_text(decision);
            let text = format!("{rationale}\nhas_error: {}", decision.as_word());
            embeddings.entry(text).or_insert_with(|| basis_vector(decision));
        }

        let agreement = diverse_decisions
            .iter()
            .filter(|&&d| d == greedy_decision)
            .count() as f64
            / diverse_decisions.len() as f64;
        scripted.push(ptrue_response(
            &case.case_id,
            &mut rng,
            agreement,
            cfg.belief_concentration,
        ));
    }

    let mock = MockJudgeClient::from_records(scripted.iter().cloned());
    let judge_cfg = JudgeConfig {
        n_diverse: cfg.n_diverse,
        ..JudgeConfig::default()
    };
    let verifications: Vec<StepVerification> = cases
        .iter()
        .map(|case| sample_step(case, &judge_cfg, &mock).expect("scripted corpus is complete"))
        .collect();

    SimCorpus {
        raw,
        cases,
        verifications,
        scripted,
        embeddings: embeddings
            .into_iter()
            .map(|(text, vector)| ScriptedEmbedding { text, vector })
            .collect(),
        summary,
    }
}

/// Snap every sample's class distribution onto its decision, producing a
/// corpus whose beliefs are exactly degenerate.
pub fn snap_to_degenerate_beliefs(verifications: &mut [StepVerification]) {
    let snap = |sample: &mut crate::types::JudgeSample| {
        if let Some(decision) = sample.decision {
            let p_error = decision.as_bit() as f64;
            sample.class_dist = Some(PredictiveDistribution {
                p_error,
                p_no_error: 1.0 - p_error,
            });
            sample.raw_token_prob_yes = Some(p_error.max(f64::MIN_POSITIVE));
            sample.raw_token_prob_no = Some((1.0 - p_error).max(f64::MIN_POSITIVE));
        }
    };
    for v in verifications {
        snap(&mut v.greedy_sample);
        for s in &mut v.diverse_samples {
            snap(s);
        }
    }
}

/// Run one estimator end to end over a corpus and return its correctness
/// AUROC. Steps where the estimator is unavailable are excluded pairwise.
pub fn oracle_separation_check(
    corpus: &SimCorpus,
    estimator: EstimatorId,
    seed: u64,
) -> Result<f64, metrics::MetricError> {
    let embedder = ScriptedEmbedder::from_map(
        corpus
            .embeddings
            .iter()
            .map(|e| (e.text.clone(), e.vector.clone()))
            .collect(),
    );
    let mock = MockJudgeClient::from_records(corpus.scripted.iter().cloned());
    let judge_cfg = JudgeConfig::default();
    let ctx = EstimateContext {
        seed,
        embedder: Some(&embedder as &dyn SentenceEmbedder),
        judge: Some((&mock, &judge_cfg)),
    };

    let scored: Vec<ScoredStep> = corpus
        .cases
        .iter()
        .zip(&corpus.verifications)
        .filter_map(|(case, verification)| {
            estimate_step(estimator, case, verification, &ctx)
                .ok()
                .map(|score| {
                    ScoredStep::new(
                        case.case_id.clone(),
                        score.score,
                        verification.predicted_label,
                        case.ground_truth,
                    )
                })
        })
        .collect();
    metrics::auroc(&scored)
}
