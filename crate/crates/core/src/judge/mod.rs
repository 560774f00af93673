//! Judge-LM driving: prompt construction, sampling, parsing, and class
//! probability extraction.

pub mod client;
pub mod parse;
pub mod prompt;

use crate::types::{JudgeSample, Label, PredictiveDistribution, StepCase, StepVerification};
use client::{ClientError, CompletionRequest, CompletionResponse, JudgeClient, SampleSlot};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Judge sampling configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct JudgeConfig {
    pub endpoint: String,
    pub model: String,
    /// Temperature of the single prediction sample.
    pub t_greedy: f64,
    /// Temperature of the diverse samples.
    pub t_diverse: f64,
    /// Number of diverse samples per step.
    pub n_diverse: u32,
    pub max_tokens: u32,
    pub top_logprobs_requested: u32,
    /// Probability floor for a class absent from the top-k alternatives.
    pub epsilon_prob: f64,
    pub request_timeout_secs: u64,
    pub max_retries: u32,
    pub max_concurrent_requests: u32,
}

impl Default for JudgeConfig {
    fn default() -> Self {
        Self {
            endpoint: String::new(),
            model: String::new(),
            t_greedy: 0.1,
            t_diverse: 1.0,
            n_diverse: 10,
            max_tokens: 512,
            top_logprobs_requested: 5,
            epsilon_prob: 1e-4,
            request_timeout_secs: 60,
            max_retries: 3,
            max_concurrent_requests: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("temperatures must be >= 0")]
    NegativeTemperature,
    #[error("n_diverse must be >= 1")]
    NoDiverseSamples,
    #[error("epsilon_prob must lie in (0, 0.01]")]
    EpsilonOutOfRange,
    #[error("max_concurrent_requests must be >= 1")]
    NoConcurrency,
}

impl JudgeConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.t_greedy < 0.0 || self.t_diverse < 0.0 {
            return Err(ConfigError::NegativeTemperature);
        }
        if self.n_diverse < 1 {
            return Err(ConfigError::NoDiverseSamples);
        }
        if !(self.epsilon_prob > 0.0 && self.epsilon_prob <= 0.01) {
            return Err(ConfigError::EpsilonOutOfRange);
        }
        if self.max_concurrent_requests < 1 {
            return Err(ConfigError::NoConcurrency);
        }
        Ok(())
    }
}

/// A step whose verification could not be completed.
#[derive(Debug, Error)]
pub enum SampleError {
    #[error("step {case_id} failed ({slot}): {source}")]
    Failed {
        case_id: String,
        slot: SampleSlot,
        source: ClientError,
    },
}

/// Turn one raw completion into a judge sample.
///
/// Parsing never aborts: unusable responses yield parse_ok = false, and a
/// response whose decision token cannot be located keeps its parsed decision
/// but carries no class distribution.
pub fn sample_from_response(
    response: &CompletionResponse,
    temperature: f64,
    epsilon_prob: f64,
) -> JudgeSample {
    let parsed = parse::parse_response(&response.text);

    let mean_token_logprob = if response.tokens.is_empty() {
        None
    } else {
        Some(response.tokens.iter().map(|t| t.logprob).sum::<f64>() / response.tokens.len() as f64)
    };

    let mut raw_yes = None;
    let mut raw_no = None;
    let mut class_dist = None;
    if parsed.parse_ok {
        let concat_len: usize = response.tokens.iter().map(|t| t.token.len()).sum();
        let located = parsed
            .decision_value_offset
            .filter(|_| concat_len == response.text.len())
            .and_then(|off| parse::token_at_offset(&response.tokens, off));
        if let Some(idx) = located {
            if let Some((yes, no, dist)) =
                parse::extract_class_probs(&response.tokens[idx].top, epsilon_prob)
            {
                raw_yes = Some(yes);
                raw_no = Some(no);
                class_dist = Some(dist);
            }
        }
    }

    JudgeSample {
        rationale: parsed.rationale,
        decision: parsed.decision,
        raw_token_prob_yes: raw_yes,
        raw_token_prob_no: raw_no,
        class_dist,
        mean_token_logprob,
        parse_ok: parsed.parse_ok,
        temperature,
    }
}

fn fallback_label(greedy: &JudgeSample) -> Label {
    greedy
        .decision
        .or_else(|| greedy.class_dist.map(|d| d.argmax()))
        .unwrap_or(Label::NoError)
}

/// Sample one greedy and n_diverse high-temperature generations for a step.
///
/// Requests fan out in waves of at most max_concurrent_requests; the result
/// is a deterministic fold over slots regardless of arrival order. A transport
/// failure on any slot fails the whole step with its cause.
pub fn sample_step(
    case: &StepCase,
    cfg: &JudgeConfig,
    client: &dyn JudgeClient,
) -> Result<StepVerification, SampleError> {
    let bundle = prompt::render_prompt(case);
    let mut slots = vec![SampleSlot::Greedy];
    slots.extend((0..cfg.n_diverse).map(SampleSlot::Diverse));

    let mut responses: Vec<Result<(SampleSlot, CompletionResponse), SampleError>> =
        Vec::with_capacity(slots.len());
    for wave in slots.chunks(cfg.max_concurrent_requests.max(1) as usize) {
        responses.extend(wave.par_iter().map(|&slot| {
            let temperature = match slot {
                SampleSlot::Greedy => cfg.t_greedy,
                _ => cfg.t_diverse,
            };
            let request = CompletionRequest {
                prompt: bundle.text.clone(),
                temperature,
                max_tokens: cfg.max_tokens,
                top_logprobs: cfg.top_logprobs_requested,
            };
            client
                .complete(&case.case_id, slot, &request)
                .map(|resp| (slot, resp))
                .map_err(|source| SampleError::Failed {
                    case_id: case.case_id.clone(),
                    slot,
                    source,
                })
        }).collect::<Vec<_>>());
    }

    let mut greedy = None;
    let mut diverse = Vec::with_capacity(cfg.n_diverse as usize);
    for result in responses {
        let (slot, resp) = result?;
        match slot {
            SampleSlot::Greedy => {
                greedy = Some(sample_from_response(&resp, cfg.t_greedy, cfg.epsilon_prob));
            }
            SampleSlot::Diverse(_) => {
                diverse.push(sample_from_response(&resp, cfg.t_diverse, cfg.epsilon_prob));
            }
            SampleSlot::PTrue => unreachable!("ptrue slot is not sampled here"),
        }
    }
    let greedy = greedy.expect("greedy slot always requested");

    // Eq. 4 consistency: the greedy decision should be the argmax of its own
    // class distribution. Discrepancies are anomalies worth surfacing, never
    // silently reconciled.
    if let (Some(decision), Some(dist)) = (greedy.decision, greedy.class_dist) {
        if decision != dist.argmax() && dist.p_error != dist.p_no_error {
            log::warn!(
                "case {}: greedy decision {} disagrees with class argmax {}",
                case.case_id,
                decision,
                dist.argmax()
            );
        }
    }

    let predicted_label = fallback_label(&greedy);
    Ok(StepVerification {
        case_id: case.case_id.clone(),
        predicted_label,
        correct: predicted_label == case.ground_truth,
        greedy_sample: greedy,
        diverse_samples: diverse,
    })
}

/// Solution-level reward: the product of step-wise no-error probabilities.
pub fn solution_reward(steps: &[PredictiveDistribution]) -> f64 {
    debug_assert!(!steps.is_empty());
    steps.iter().map(|d| d.p_no_error).product()
}
