//! Uncertainty estimators over sampled judge outputs.
//!
//! Every estimator maps a step's diverse samples to a score oriented
//! higher = more uncertain. The chain-of-thought entropy family marginalizes
//! sampled rationales into a posterior predictive verdict distribution and
//! takes its entropy; the decomposition splits that entropy into an expected
//! per-rationale part (aleatoric) and the Jensen gap across rationales
//! (epistemic, the mutual information between verdict and rationale).

pub mod embed;

use crate::judge::client::{CompletionRequest, JudgeClient, SampleSlot};
use crate::judge::{parse, prompt, JudgeConfig};
use crate::types::{
    EstimatorId, JudgeSample, Label, PredictiveDistribution, StepCase, StepVerification,
};
use embed::SentenceEmbedder;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Why an estimator produced no score for a step.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Unavailable {
    #[error("no samples with a usable class distribution")]
    NoUsableSamples,
    #[error("no parsed samples")]
    NoParsedSamples,
    #[error("one or more samples lack token log probabilities")]
    MissingLogprobs,
    #[error("greedy decision missing")]
    NoGreedyDecision,
    #[error("embedder failure: {0}")]
    Embedder(String),
    #[error("judge call failed: {0}")]
    Judge(String),
    #[error("no judge client configured")]
    NoJudgeClient,
    #[error("no embedder configured")]
    NoEmbedder,
}

/// A computed score plus the number of samples that informed it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorScore {
    pub score: f64,
    pub n_samples_used: usize,
}

/// Natural-log entropy of a Bernoulli(p) variable, with 0 ln 0 = 0.
pub fn binary_entropy(p: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p), "probability out of range: {p}");
    let term = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.ln() };
    term(p) + term(1.0 - p)
}

/// Samples grouped into the two decision clusters.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClusterSet {
    pub no_error: Cluster,
    pub error: Cluster,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Cluster {
    /// Class distributions of members that carry one.
    pub dists: Vec<PredictiveDistribution>,
    /// Parsed members, including those without a class distribution.
    pub count: usize,
}

impl ClusterSet {
    pub fn from_samples(samples: &[JudgeSample]) -> Self {
        let mut set = ClusterSet::default();
        for s in samples {
            let Some(decision) = s.decision else { continue };
            if !s.parse_ok {
                continue;
            }
            let cluster = match decision {
                Label::NoError => &mut set.no_error,
                Label::Error => &mut set.error,
            };
            cluster.count += 1;
            if let Some(d) = s.class_dist.filter(|d| d.is_valid()) {
                cluster.dists.push(d);
            }
        }
        set
    }

    pub fn parsed_count(&self) -> usize {
        self.no_error.count + self.error.count
    }
}

/// Monte-Carlo posterior predictive verdict distribution: the uniform average
/// of per-rationale class distributions over usable samples.
pub fn posterior_predictive(
    samples: &[JudgeSample],
) -> Result<(PredictiveDistribution, usize), Unavailable> {
    let usable: Vec<PredictiveDistribution> = samples
        .iter()
        .filter(|s| s.has_usable_dist())
        .filter_map(|s| s.class_dist)
        .collect();
    if usable.is_empty() {
        return Err(Unavailable::NoUsableSamples);
    }
    let n = usable.len() as f64;
    let p_error = usable.iter().map(|d| d.p_error).sum::<f64>() / n;
    let dist = PredictiveDistribution {
        p_error,
        p_no_error: 1.0 - p_error,
    };
    Ok((dist, usable.len()))
}

/// Entropy of the posterior predictive verdict distribution.
pub fn cot_entropy(samples: &[JudgeSample]) -> Result<EstimatorScore, Unavailable> {
    let (dist, n) = posterior_predictive(samples)?;
    Ok(EstimatorScore {
        score: binary_entropy(dist.p_error),
        n_samples_used: n,
    })
}

/// Entropy of the empirical decision-class frequencies; needs no token
/// probabilities, so it works on black-box judges.
pub fn cot_entropy_discrete(samples: &[JudgeSample]) -> Result<EstimatorScore, Unavailable> {
    let clusters = ClusterSet::from_samples(samples);
    let n = clusters.parsed_count();
    if n == 0 {
        return Err(Unavailable::NoParsedSamples);
    }
    let p_error = clusters.error.count as f64 / n as f64;
    Ok(EstimatorScore {
        score: binary_entropy(p_error),
        n_samples_used: n,
    })
}

/// Negated mean of length-normalized sequence log probabilities over all
/// diverse samples, parse failures included.
pub fn naive_entropy(samples: &[JudgeSample]) -> Result<EstimatorScore, Unavailable> {
    if samples.is_empty() {
        return Err(Unavailable::NoUsableSamples);
    }
    let mut sum = 0.0;
    for s in samples {
        let lp = s.mean_token_logprob.ok_or(Unavailable::MissingLogprobs)?;
        sum += lp;
    }
    Ok(EstimatorScore {
        score: -sum / samples.len() as f64,
        n_samples_used: samples.len(),
    })
}

/// Total, expected per-rationale, and mutual-information components of the
/// predictive verdict entropy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecompositionResult {
    pub total: f64,
    pub aleatoric: f64,
    pub epistemic: f64,
}

/// Split the posterior predictive entropy into aleatoric and epistemic parts.
///
/// total = H(mean of per-rationale distributions); aleatoric = mean of
/// per-rationale entropies; epistemic = total - aleatoric, which is
/// non-negative by Jensen's inequality for the concave entropy.
pub fn decompose(samples: &[JudgeSample]) -> Result<(DecompositionResult, usize), Unavailable> {
    let usable: Vec<PredictiveDistribution> = samples
        .iter()
        .filter(|s| s.has_usable_dist())
        .filter_map(|s| s.class_dist)
        .collect();
    if usable.is_empty() {
        return Err(Unavailable::NoUsableSamples);
    }
    let n = usable.len() as f64;
    let mean_p_error = usable.iter().map(|d| d.p_error).sum::<f64>() / n;
    let total = binary_entropy(mean_p_error);
    let aleatoric = usable.iter().map(|d| binary_entropy(d.p_error)).sum::<f64>() / n;
    Ok((
        DecompositionResult {
            total,
            aleatoric,
            epistemic: total - aleatoric,
        },
        usable.len(),
    ))
}

/// Embedding diversity: one minus the mean pairwise cosine similarity of the
/// sampled response texts.
///
/// Fewer than two usable samples yields score 0 with the low sample count
/// visible in `n_samples_used`.
pub fn seu(
    samples: &[JudgeSample],
    embedder: &dyn SentenceEmbedder,
) -> Result<EstimatorScore, Unavailable> {
    let texts: Vec<String> = samples.iter().filter_map(|s| s.embedding_text()).collect();
    if texts.len() < 2 {
        return Ok(EstimatorScore {
            score: 0.0,
            n_samples_used: texts.len(),
        });
    }
    let vectors = embedder
        .embed(&texts)
        .map_err(|e| Unavailable::Embedder(e.to_string()))?;
    if vectors.len() != texts.len() {
        return Err(Unavailable::Embedder(format!(
            "embedder returned {} vectors for {} texts",
            vectors.len(),
            texts.len()
        )));
    }
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for i in 0..vectors.len() {
        for j in (i + 1)..vectors.len() {
            sum += cosine(&vectors[i], &vectors[j])
                .map_err(Unavailable::Embedder)?;
            pairs += 1;
        }
    }
    Ok(EstimatorScore {
        score: 1.0 - sum / pairs as f64,
        n_samples_used: texts.len(),
    })
}

fn cosine(a: &[f64], b: &[f64]) -> Result<f64, String> {
    if a.len() != b.len() {
        return Err(format!("dimension mismatch: {} vs {}", a.len(), b.len()));
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err("zero-norm embedding vector".to_string());
    }
    Ok(dot / (na * nb))
}

/// Uniform score in [0, 1), a pure function of (seed, case_id).
pub fn random_baseline(seed: u64, case_id: &str) -> f64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(case_id.as_bytes());
    let digest = hasher.finalize();
    let v = u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"));
    (v >> 11) as f64 / (1u64 << 53) as f64
}

/// Version tag of the self-reflection template.
pub const PTRUE_TEMPLATE_VERSION: &str = "ptrue-v1";

/// Render the zero-shot reflection prompt comparing the greedy verdict with
/// the brainstormed alternatives.
pub fn render_ptrue_prompt(case: &StepCase, verification: &StepVerification) -> Option<String> {
    let greedy = verification.greedy_sample.decision?;
    let brainstormed: Vec<String> = verification
        .diverse_samples
        .iter()
        .filter_map(|s| s.decision)
        .map(|d| format!("- {}", d.as_word()))
        .collect();
    let preceding = prompt::render_preceding(&case.preceding_steps);
    Some(format!(
        r#"You are a professional mathematician reviewing a verification verdict.

Problem: {question}
Preceding Steps: {preceding}

Step under evaluation: {step}

The verdict question was: does this step contain an error ("yes" or "no")?

Brainstormed answers:
{brainstormed}

Proposed answer: {proposed}

Is the proposed answer correct? Respond with exactly one word: True or False."#,
        question = case.question,
        preceding = preceding,
        step = case.candidate_step,
        brainstormed = brainstormed.join("\n"),
        proposed = greedy.as_word(),
    ))
}

/// Self-reflection uncertainty: one minus the probability the judge assigns
/// to its greedy verdict being true, read at the True/False answer token.
pub fn p_true(
    case: &StepCase,
    verification: &StepVerification,
    cfg: &JudgeConfig,
    client: &dyn JudgeClient,
) -> Result<EstimatorScore, Unavailable> {
    let prompt_text = render_ptrue_prompt(case, verification).ok_or(Unavailable::NoGreedyDecision)?;
    let request = CompletionRequest {
        prompt: prompt_text,
        temperature: cfg.t_greedy,
        max_tokens: 16,
        top_logprobs: cfg.top_logprobs_requested,
    };
    let response = client
        .complete(&case.case_id, SampleSlot::PTrue, &request)
        .map_err(|e| Unavailable::Judge(e.to_string()))?;

    // First generated token that renders a True/False answer.
    let answer = response.tokens.iter().find(|t| {
        let word = parse::normalized_word(&t.token);
        word == "true" || word == "false"
    });
    let answer = answer.ok_or_else(|| Unavailable::Judge("no True/False answer token".into()))?;
    let (true_mass, false_mass) =
        parse::class_masses(&answer.top, "true", "false", cfg.epsilon_prob)
            .ok_or_else(|| Unavailable::Judge("True/False absent from top-k".into()))?;
    let p_true = true_mass / (true_mass + false_mass);
    Ok(EstimatorScore {
        score: 1.0 - p_true,
        n_samples_used: 1,
    })
}

/// Everything an estimator may need beyond the step itself.
pub struct EstimateContext<'a> {
    pub seed: u64,
    pub embedder: Option<&'a dyn SentenceEmbedder>,
    pub judge: Option<(&'a dyn JudgeClient, &'a JudgeConfig)>,
}

/// Compute one estimator's score for one verified step.
pub fn estimate_step(
    estimator: EstimatorId,
    case: &StepCase,
    verification: &StepVerification,
    ctx: &EstimateContext<'_>,
) -> Result<EstimatorScore, Unavailable> {
    let samples = &verification.diverse_samples;
    match estimator {
        EstimatorId::CotEntropy => cot_entropy(samples),
        EstimatorId::CotEntropyDiscrete => cot_entropy_discrete(samples),
        EstimatorId::NaiveEntropy => naive_entropy(samples),
        EstimatorId::Seu => {
            let embedder = ctx.embedder.ok_or(Unavailable::NoEmbedder)?;
            seu(samples, embedder)
        }
        EstimatorId::PTrue => {
            let (client, cfg) = ctx.judge.ok_or(Unavailable::NoJudgeClient)?;
            p_true(case, verification, cfg, client)
        }
        EstimatorId::Random => Ok(EstimatorScore {
            score: random_baseline(ctx.seed, &case.case_id),
            n_samples_used: 0,
        }),
        EstimatorId::Total => decompose(samples).map(|(d, n)| EstimatorScore {
            score: d.total,
            n_samples_used: n,
        }),
        EstimatorId::Aleatoric => decompose(samples).map(|(d, n)| EstimatorScore {
            score: d.aleatoric,
            n_samples_used: n,
        }),
        EstimatorId::Epistemic => decompose(samples).map(|(d, n)| EstimatorScore {
            score: d.epistemic,
            n_samples_used: n,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::embed::ScriptedEmbedder;
    use super::*;
    use crate::types::LN_2;

    pub(super) fn sample_with_p_error(p_error: f64) -> JudgeSample {
        let dist = PredictiveDistribution::from_p_error(p_error).unwrap();
        JudgeSample {
            rationale: format!("p_error {p_error}"),
            decision: Some(dist.argmax()),
            raw_token_prob_yes: Some(p_error.max(1e-9)),
            raw_token_prob_no: Some((1.0 - p_error).max(1e-9)),
            class_dist: Some(dist),
            mean_token_logprob: Some(-0.5),
            parse_ok: true,
            temperature: 1.0,
        }
    }

    fn samples_with(p_errors: &[f64]) -> Vec<JudgeSample> {
        p_errors.iter().map(|&p| sample_with_p_error(p)).collect()
    }

    #[test]
    fn binary_entropy_known_values() {
        assert!((binary_entropy(0.5) - LN_2).abs() < 1e-12);
        assert_eq!(binary_entropy(1.0), 0.0);
        assert_eq!(binary_entropy(0.0), 0.0);
        assert!((binary_entropy(0.8) - 0.5004024235381879).abs() < 1e-10);
        assert!((binary_entropy(0.3) - 0.6108643020548935).abs() < 1e-10);
    }

    #[test]
    fn posterior_predictive_is_mean() {
        let (d, n) = posterior_predictive(&samples_with(&[0.9, 0.7, 0.8])).unwrap();
        assert!((d.p_error - 0.8).abs() < 1e-12);
        assert_eq!(n, 3);
        let (single, _) = posterior_predictive(&samples_with(&[0.3])).unwrap();
        assert!((single.p_error - 0.3).abs() < 1e-12);
        let (same, _) = posterior_predictive(&samples_with(&[0.5, 0.5, 0.5])).unwrap();
        assert_eq!(same.p_error, 0.5);
    }

    #[test]
    fn posterior_predictive_requires_usable_samples() {
        let mut s = sample_with_p_error(0.5);
        s.class_dist = None;
        assert_eq!(
            posterior_predictive(&[s]).unwrap_err(),
            Unavailable::NoUsableSamples
        );
    }

    #[test]
    fn cot_entropy_matches_hand_value() {
        let score = cot_entropy(&samples_with(&[0.9, 0.7, 0.8])).unwrap();
        assert!((score.score - 0.50040).abs() < 1e-4);
        assert_eq!(score.n_samples_used, 3);
    }

    #[test]
    fn cot_entropy_degenerate_and_conflicting() {
        let unanimous = cot_entropy(&samples_with(&[1.0, 1.0, 1.0])).unwrap();
        assert_eq!(unanimous.score, 0.0);
        let conflict = cot_entropy(&samples_with(&[1.0, 0.0])).unwrap();
        assert!((conflict.score - LN_2).abs() < 1e-12);
    }

    #[test]
    fn discrete_entropy_from_decision_frequencies() {
        let unanimous = cot_entropy_discrete(&samples_with(&[1.0, 1.0, 1.0, 1.0])).unwrap();
        assert_eq!(unanimous.score, 0.0);
        let split = cot_entropy_discrete(&samples_with(&[1.0, 0.0])).unwrap();
        assert!((split.score - LN_2).abs() < 1e-12);
        let mix = cot_entropy_discrete(&samples_with(&[
            1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
        ]))
        .unwrap();
        assert!((mix.score - 0.61086).abs() < 1e-4);
    }

    #[test]
    fn naive_entropy_negated_mean() {
        let mut samples = samples_with(&[0.5, 0.5]);
        samples[0].mean_token_logprob = Some(-0.5);
        samples[1].mean_token_logprob = Some(-1.5);
        let score = naive_entropy(&samples).unwrap();
        assert!((score.score - 1.0).abs() < 1e-12);

        let mut zero = samples_with(&[0.5]);
        zero[0].mean_token_logprob = Some(0.0);
        assert_eq!(naive_entropy(&zero).unwrap().score, 0.0);

        let mut one = samples_with(&[0.5]);
        one[0].mean_token_logprob = Some(-0.2);
        assert!((naive_entropy(&one).unwrap().score - 0.2).abs() < 1e-12);
    }

    #[test]
    fn naive_entropy_includes_parse_failures_but_needs_logprobs() {
        let mut samples = samples_with(&[0.5, 0.5]);
        samples[1].parse_ok = false;
        samples[1].decision = None;
        samples[1].mean_token_logprob = Some(-2.0);
        samples[0].mean_token_logprob = Some(-1.0);
        let score = naive_entropy(&samples).unwrap();
        assert!((score.score - 1.5).abs() < 1e-12);
        assert_eq!(score.n_samples_used, 2);

        samples[1].mean_token_logprob = None;
        assert_eq!(
            naive_entropy(&samples).unwrap_err(),
            Unavailable::MissingLogprobs
        );
    }

    #[test]
    fn decompose_hand_fixture() {
        let (d, _) = decompose(&samples_with(&[0.9, 0.7, 0.8])).unwrap();
        assert!((d.total - 0.50040).abs() < 1e-4);
        assert!((d.aleatoric - 0.47878).abs() < 1e-4);
        assert!((d.epistemic - 0.02162).abs() < 1e-4);
    }

    #[test]
    fn decompose_limiting_cases() {
        let (identical, _) = decompose(&samples_with(&[0.7, 0.7, 0.7])).unwrap();
        assert!(identical.epistemic.abs() < 1e-12);
        let (conflict, _) = decompose(&samples_with(&[1.0, 0.0])).unwrap();
        assert!((conflict.total - LN_2).abs() < 1e-12);
        assert_eq!(conflict.aleatoric, 0.0);
        assert!((conflict.epistemic - LN_2).abs() < 1e-12);
    }

    #[test]
    fn cot_entropy_equals_decompose_total_exactly() {
        let sets: [&[f64]; 4] = [
            &[0.9, 0.7, 0.8],
            &[0.1],
            &[0.25, 0.5, 0.75, 1.0],
            &[0.0, 1.0, 0.5],
        ];
        for ps in sets {
            let samples = samples_with(ps);
            let a = cot_entropy(&samples).unwrap().score;
            let (d, _) = decompose(&samples).unwrap();
            assert_eq!(a, d.total);
        }
    }

    #[test]
    fn discrete_equals_continuous_on_degenerate_dists() {
        let samples = samples_with(&[1.0, 1.0, 0.0, 1.0, 0.0]);
        let cont = cot_entropy(&samples).unwrap().score;
        let disc = cot_entropy_discrete(&samples).unwrap().score;
        assert_eq!(cont, disc);
    }

    #[test]
    fn estimator_scores_invariant_under_permutation() {
        let mut samples = samples_with(&[0.9, 0.2, 0.6, 0.4]);
        for (i, s) in samples.iter_mut().enumerate() {
            s.mean_token_logprob = Some(-(i as f64) * 0.3 - 0.1);
        }
        let before = (
            cot_entropy(&samples).unwrap().score,
            cot_entropy_discrete(&samples).unwrap().score,
            naive_entropy(&samples).unwrap().score,
        );
        samples.reverse();
        samples.swap(0, 2);
        let after = (
            cot_entropy(&samples).unwrap().score,
            cot_entropy_discrete(&samples).unwrap().score,
            naive_entropy(&samples).unwrap().score,
        );
        // Summation order may differ, so invariance holds to rounding.
        assert!((before.0 - after.0).abs() < 1e-12);
        assert!((before.1 - after.1).abs() < 1e-12);
        assert!((before.2 - after.2).abs() < 1e-12);
    }

    fn ptrue_fixture(p_true_mass: f64, false_mass: Option<f64>) -> (crate::types::StepCase, StepVerification, crate::judge::client::MockJudgeClient) {
        use crate::judge::client::{MockJudgeClient, SampleSlot, ScriptedResponse, TokenLogProb};
        let case = crate::types::StepCase {
            case_id: "c1".to_string(),
            solution_id: "s1".to_string(),
            question: "q".to_string(),
            preceding_steps: vec!["step 1".to_string()],
            candidate_step: "step 2".to_string(),
            step_index: 2,
            ground_truth: Label::NoError,
        };
        let verification = StepVerification {
            case_id: "c1".to_string(),
            greedy_sample: sample_with_p_error(0.2),
            predicted_label: Label::NoError,
            correct: true,
            diverse_samples: samples_with(&[0.1, 0.8, 0.3]),
        };
        let mut top = vec![("True".to_string(), p_true_mass.ln())];
        if let Some(f) = false_mass {
            top.push(("False".to_string(), f.ln()));
        }
        let mock = MockJudgeClient::from_records([ScriptedResponse {
            case_id: "c1".to_string(),
            slot: SampleSlot::PTrue,
            text: "True".to_string(),
            tokens: vec![TokenLogProb {
                token: "True".to_string(),
                logprob: p_true_mass.ln(),
                top,
            }],
        }]);
        (case, verification, mock)
    }

    #[test]
    fn p_true_complements_scripted_probability() {
        let cfg = crate::judge::JudgeConfig::default();
        let (case, verification, mock) = ptrue_fixture(0.75, Some(0.25));
        let score = p_true(&case, &verification, &cfg, &mock).unwrap();
        assert!((score.score - 0.25).abs() < 1e-12);

        let (case, verification, mock) = ptrue_fixture(0.5, Some(0.5));
        let score = p_true(&case, &verification, &cfg, &mock).unwrap();
        assert_eq!(score.score, 0.5);

        // Fully self-confident judge: the False mass is absent from top-k and
        // floored at epsilon, so the score lands within a floor of zero.
        let (case, verification, mock) = ptrue_fixture(1.0, None);
        let score = p_true(&case, &verification, &cfg, &mock).unwrap();
        assert!(score.score < 2e-4, "score {}", score.score);
    }

    #[test]
    fn p_true_prompt_lists_proposed_and_brainstormed() {
        let (case, verification, _) = ptrue_fixture(0.75, Some(0.25));
        let prompt = render_ptrue_prompt(&case, &verification).unwrap();
        assert!(prompt.contains("Proposed answer: no"));
        assert!(prompt.contains("Brainstormed answers:"));
        assert_eq!(prompt.matches("- no").count(), 2);
        assert_eq!(prompt.matches("- yes").count(), 1);
        assert!(prompt.contains("True or False"));
    }

    #[test]
    fn p_true_without_greedy_decision_is_unavailable() {
        let cfg = crate::judge::JudgeConfig::default();
        let (case, mut verification, mock) = ptrue_fixture(0.75, Some(0.25));
        verification.greedy_sample.decision = None;
        verification.greedy_sample.parse_ok = false;
        assert_eq!(
            p_true(&case, &verification, &cfg, &mock).unwrap_err(),
            Unavailable::NoGreedyDecision
        );
    }

    #[test]
    fn random_baseline_deterministic_and_uniform() {
        assert_eq!(random_baseline(7, "case-a"), random_baseline(7, "case-a"));
        assert_ne!(random_baseline(7, "case-a"), random_baseline(8, "case-a"));
        let n = 10_000;
        let mut sum = 0.0;
        for i in 0..n {
            let v = random_baseline(42, &format!("case-{i}"));
            assert!((0.0..1.0).contains(&v));
            sum += v;
        }
        let mean = sum / n as f64;
        assert!((mean - 0.5).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn seu_scores_from_scripted_vectors() {
        use std::collections::BTreeMap;
        let samples = samples_with(&[0.9, 0.9, 0.1]);
        let texts: Vec<String> = samples.iter().map(|s| s.embedding_text().unwrap()).collect();
        // Pairwise cosines: (1, 0.5, 0.5).
        let base = [vec![1.0, 0.0],
            vec![1.0, 0.0],
            vec![0.5, 3.0f64.sqrt() / 2.0]];
        let scale = |k: f64| -> BTreeMap<String, Vec<f64>> {
            texts
                .iter()
                .cloned()
                .zip(base.iter().map(|v| v.iter().map(|x| x * k).collect()))
                .collect()
        };
        // Identical texts collapse to one map entry, which is fine: equal
        // texts embed to equal vectors.
        let e1 = ScriptedEmbedder::from_map(scale(1.0));
        let s1 = seu(&samples, &e1).unwrap();
        assert!((s1.score - (1.0 - 2.0 / 3.0)).abs() < 1e-12, "got {}", s1.score);
        // Cosine is scale-free.
        let e2 = ScriptedEmbedder::from_map(scale(41.5));
        let s2 = seu(&samples, &e2).unwrap();
        assert!((s1.score - s2.score).abs() < 1e-12);
    }

    #[test]
    fn seu_identical_and_orthogonal_extremes() {
        use std::collections::BTreeMap;
        let samples = samples_with(&[0.9, 0.9]);
        let texts: Vec<String> = samples.iter().map(|s| s.embedding_text().unwrap()).collect();
        let same = ScriptedEmbedder::from_map(BTreeMap::from([(texts[0].clone(), vec![2.0, 1.0])]));
        assert!(seu(&samples, &same).unwrap().score.abs() < 1e-12);

        let mixed = samples_with(&[0.9, 0.1]);
        let texts: Vec<String> = mixed.iter().map(|s| s.embedding_text().unwrap()).collect();
        let ortho = ScriptedEmbedder::from_map(BTreeMap::from([
            (texts[0].clone(), vec![1.0, 0.0]),
            (texts[1].clone(), vec![0.0, 1.0]),
        ]));
        assert!((seu(&mixed, &ortho).unwrap().score - 1.0).abs() < 1e-12);
    }

    #[test]
    fn seu_low_sample_flag() {
        let samples = samples_with(&[0.9]);
        let e = ScriptedEmbedder::from_map(Default::default());
        let s = seu(&samples, &e).unwrap();
        assert_eq!(s.score, 0.0);
        assert_eq!(s.n_samples_used, 1);
    }

    #[test]
    fn cluster_counts_cover_parsed_samples() {
        let mut samples = samples_with(&[0.9, 0.1, 0.8]);
        samples[1].class_dist = None; // parsed but unusable for probabilities
        let mut unparsed = sample_with_p_error(0.5);
        unparsed.parse_ok = false;
        unparsed.decision = None;
        samples.push(unparsed);
        let clusters = ClusterSet::from_samples(&samples);
        assert_eq!(clusters.parsed_count(), 3);
        assert_eq!(clusters.error.count, 2);
        assert_eq!(clusters.no_error.count, 1);
        assert_eq!(clusters.error.dists.len(), 2);
        assert_eq!(clusters.no_error.dists.len(), 0);
    }
}
