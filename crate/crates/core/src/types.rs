//! Domain types shared by every stage of the verification pipeline.
//!
//! Labels follow one convention everywhere: 1 = the step contains an error.
//! Entropies are natural-log; the two-class maximum is ln 2.

use serde::{Deserialize, Serialize};
use std::fmt;

/// Two-class maximum of the natural-log binary entropy.
pub const LN_2: f64 = std::f64::consts::LN_2;

/// Tolerance for probability-sum and entropy-identity checks.
pub const PROB_TOLERANCE: f64 = 1e-9;

/// Binary step label: 1 = the step contains an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Label {
    NoError,
    Error,
}

impl Label {
    pub fn as_bit(self) -> u8 {
        match self {
            Label::NoError => 0,
            Label::Error => 1,
        }
    }

    pub fn is_error(self) -> bool {
        self == Label::Error
    }

    /// Decision word as rendered by the verification template.
    pub fn as_word(self) -> &'static str {
        match self {
            Label::NoError => "no",
            Label::Error => "yes",
        }
    }
}

impl From<Label> for u8 {
    fn from(l: Label) -> u8 {
        l.as_bit()
    }
}

impl TryFrom<u8> for Label {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, String> {
        match v {
            0 => Ok(Label::NoError),
            1 => Ok(Label::Error),
            other => Err(format!("label must be 0 or 1, got {other}")),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_bit())
    }
}

/// One reasoning step to verify: the question, everything proposed so far,
/// the candidate step, and its ground-truth error label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepCase {
    pub case_id: String,
    pub solution_id: String,
    pub question: String,
    pub preceding_steps: Vec<String>,
    pub candidate_step: String,
    /// 1-based position within the solution trace.
    pub step_index: usize,
    pub ground_truth: Label,
}

impl StepCase {
    /// step_index must equal 1 + number of preceding steps.
    pub fn index_consistent(&self) -> bool {
        self.step_index == 1 + self.preceding_steps.len()
    }
}

/// Normalized two-class belief over {no_error, error}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictiveDistribution {
    pub p_no_error: f64,
    pub p_error: f64,
}

impl PredictiveDistribution {
    /// Normalize two non-negative class masses into a distribution.
    ///
    /// Returns `None` when either mass is negative, non-finite, or both are zero.
    pub fn from_class_masses(mass_no_error: f64, mass_error: f64) -> Option<Self> {
        if !mass_no_error.is_finite() || !mass_error.is_finite() {
            return None;
        }
        if mass_no_error < 0.0 || mass_error < 0.0 {
            return None;
        }
        let total = mass_no_error + mass_error;
        if total <= 0.0 {
            return None;
        }
        Some(Self {
            p_no_error: mass_no_error / total,
            p_error: mass_error / total,
        })
    }

    /// Distribution with the given error probability.
    pub fn from_p_error(p_error: f64) -> Option<Self> {
        if !(0.0..=1.0).contains(&p_error) || !p_error.is_finite() {
            return None;
        }
        Some(Self {
            p_no_error: 1.0 - p_error,
            p_error,
        })
    }

    /// Components non-negative and summing to 1 within tolerance.
    pub fn is_valid(&self) -> bool {
        self.p_no_error >= 0.0
            && self.p_error >= 0.0
            && (self.p_no_error + self.p_error - 1.0).abs() <= PROB_TOLERANCE
    }

    /// Most likely class.
    pub fn argmax(&self) -> Label {
        if self.p_error > self.p_no_error {
            Label::Error
        } else {
            Label::NoError
        }
    }

    /// True when all mass sits on one class.
    pub fn is_degenerate(&self) -> bool {
        self.p_error == 0.0 || self.p_error == 1.0
    }
}

/// One sampled judge output: critique text, parsed verdict, and the token
/// probabilities read at the decision position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgeSample {
    pub rationale: String,
    /// Parsed verdict; `None` when the response had no recognizable record.
    pub decision: Option<Label>,
    /// Class mass read for the yes-token at the decision position, floored at
    /// the configured epsilon. `None` when the position was not locatable.
    pub raw_token_prob_yes: Option<f64>,
    pub raw_token_prob_no: Option<f64>,
    /// Normalized two-class belief; `None` when token probabilities were
    /// unavailable (the sample still counts for frequency-based estimators).
    pub class_dist: Option<PredictiveDistribution>,
    /// Length-normalized sequence log probability.
    pub mean_token_logprob: Option<f64>,
    pub parse_ok: bool,
    pub temperature: f64,
}

impl JudgeSample {
    /// Usable by probability-weighted estimators: parsed and carrying a
    /// valid class distribution.
    pub fn has_usable_dist(&self) -> bool {
        self.parse_ok && self.class_dist.is_some_and(|d| d.is_valid())
    }

    /// Text an embedding model sees for this sample: critique plus verdict.
    pub fn embedding_text(&self) -> Option<String> {
        let decision = self.decision?;
        Some(format!("{}\nhas_error: {}", self.rationale, decision.as_word()))
    }
}

/// Verification outcome for one step: the greedy prediction plus the diverse
/// samples used for uncertainty estimation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepVerification {
    pub case_id: String,
    pub greedy_sample: JudgeSample,
    pub predicted_label: Label,
    /// z_t: whether the greedy prediction matched the ground-truth label.
    pub correct: bool,
    pub diverse_samples: Vec<JudgeSample>,
}

impl StepVerification {
    pub fn correctness_bit(&self) -> u8 {
        self.correct as u8
    }
}

/// Identifier for one uncertainty estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorId {
    CotEntropy,
    CotEntropyDiscrete,
    NaiveEntropy,
    PTrue,
    Seu,
    Random,
    Total,
    Aleatoric,
    Epistemic,
}

impl EstimatorId {
    pub const ALL: [EstimatorId; 9] = [
        EstimatorId::CotEntropy,
        EstimatorId::CotEntropyDiscrete,
        EstimatorId::NaiveEntropy,
        EstimatorId::PTrue,
        EstimatorId::Seu,
        EstimatorId::Random,
        EstimatorId::Total,
        EstimatorId::Aleatoric,
        EstimatorId::Epistemic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorId::CotEntropy => "cot_entropy",
            EstimatorId::CotEntropyDiscrete => "cot_entropy_discrete",
            EstimatorId::NaiveEntropy => "naive_entropy",
            EstimatorId::PTrue => "p_true",
            EstimatorId::Seu => "seu",
            EstimatorId::Random => "random",
            EstimatorId::Total => "total",
            EstimatorId::Aleatoric => "aleatoric",
            EstimatorId::Epistemic => "epistemic",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|id| id.as_str() == s)
    }

    /// Scores bounded by the two-class entropy maximum ln 2.
    pub fn is_binary_entropy_family(self) -> bool {
        matches!(
            self,
            EstimatorId::CotEntropy
                | EstimatorId::CotEntropyDiscrete
                | EstimatorId::Total
                | EstimatorId::Aleatoric
                | EstimatorId::Epistemic
        )
    }

    /// Estimators whose score depends on an evaluation-time seed.
    pub fn is_stochastic(self) -> bool {
        matches!(self, EstimatorId::Random)
    }
}

impl fmt::Display for EstimatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One uncertainty score for one step. Higher = more uncertain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyRecord {
    pub case_id: String,
    pub estimator: EstimatorId,
    pub score: f64,
    pub n_samples_used: usize,
}

impl UncertaintyRecord {
    /// Bound check for entropy-family scores.
    pub fn score_in_entropy_range(&self) -> bool {
        !self.estimator.is_binary_entropy_family()
            || (self.score >= -PROB_TOLERANCE && self.score <= LN_2 + PROB_TOLERANCE)
    }
}

/// Mean and spread of one metric across evaluation runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub std: f64,
}

/// One point of a rejection curve: F1 on the retained most-confident subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub coverage: f64,
    pub f1: f64,
    pub f1_std: f64,
    pub n_retained: usize,
}

/// Per-estimator evaluation results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorReport {
    pub estimator: EstimatorId,
    /// Steps with a score from this estimator.
    pub n_used: usize,
    /// Steps excluded because the estimator was unavailable for them.
    pub n_excluded: usize,
    /// Evaluation repetitions (5 for seed-dependent estimators, otherwise 1).
    pub n_runs: usize,
    pub auroc: Option<MetricSummary>,
    pub auprc: Option<MetricSummary>,
    pub au_f1c: Option<MetricSummary>,
    pub rejection_curve: Vec<CurvePoint>,
}

/// Corpus-level verification quality, independent of any estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalStats {
    pub n_steps: usize,
    pub verification_accuracy: f64,
    pub verification_f1: f64,
    pub positive_rate: f64,
}

/// Full evaluation report: per-estimator metrics plus corpus-level stats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub global: GlobalStats,
    pub estimators: Vec<EstimatorReport>,
}

/// A single trace-invariant violation found by [`validate_trace`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    /// step_index sequence has a hole or does not start at 1.
    IndexGap { expected: usize, found: usize },
    /// A positive label appears before the final step.
    PositiveNotTerminal { step_index: usize },
    /// More than one step carries a positive label.
    MultiplePositives { count: usize },
    /// Steps belong to different solution ids.
    MixedSolutionIds { expected: String, found: String },
    /// step_index does not equal 1 + preceding_steps.len().
    IndexPrecedingMismatch { step_index: usize, preceding: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::IndexGap { expected, found } => {
                write!(f, "index gap: expected step {expected}, found {found}")
            }
            Violation::PositiveNotTerminal { step_index } => {
                write!(f, "positive not terminal: step {step_index} has label 1 but is not last")
            }
            Violation::MultiplePositives { count } => {
                write!(f, "multiple positives: {count} steps have label 1")
            }
            Violation::MixedSolutionIds { expected, found } => {
                write!(f, "mixed solution ids: expected {expected}, found {found}")
            }
            Violation::IndexPrecedingMismatch { step_index, preceding } => {
                write!(
                    f,
                    "step_index {step_index} does not match {preceding} preceding steps"
                )
            }
        }
    }
}

/// Check one solution trace against the truncation invariants.
///
/// Traces are annotated so they end at the first error: at most one positive
/// label, and if present it must be the last step. Returns every violation
/// found; an empty list means the trace is valid.
pub fn validate_trace(steps: &[StepCase]) -> Vec<Violation> {
    let mut violations = Vec::new();
    if steps.is_empty() {
        return violations;
    }

    let solution_id = &steps[0].solution_id;
    for (i, step) in steps.iter().enumerate() {
        let expected = i + 1;
        if step.step_index != expected {
            violations.push(Violation::IndexGap {
                expected,
                found: step.step_index,
            });
        }
        if !step.index_consistent() {
            violations.push(Violation::IndexPrecedingMismatch {
                step_index: step.step_index,
                preceding: step.preceding_steps.len(),
            });
        }
        if &step.solution_id != solution_id {
            violations.push(Violation::MixedSolutionIds {
                expected: solution_id.clone(),
                found: step.solution_id.clone(),
            });
        }
    }

    let positives: Vec<&StepCase> = steps.iter().filter(|s| s.ground_truth.is_error()).collect();
    if positives.len() > 1 {
        violations.push(Violation::MultiplePositives {
            count: positives.len(),
        });
    }
    let last_index = steps.len();
    for p in &positives {
        if p.step_index != last_index {
            violations.push(Violation::PositiveNotTerminal {
                step_index: p.step_index,
            });
        }
    }

    violations
}


#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn normalized_masses_always_sum_to_one(
            a in 1e-12f64..1e3,
            b in 1e-12f64..1e3,
        ) {
            let d = PredictiveDistribution::from_class_masses(a, b).unwrap();
            prop_assert!(d.is_valid());
            prop_assert!(d.p_error >= 0.0 && d.p_no_error >= 0.0);
        }

        #[test]
        fn correctness_recomputes_from_labels(pred in 0u8..2, gt in 0u8..2) {
            let predicted = Label::try_from(pred).unwrap();
            let ground_truth = Label::try_from(gt).unwrap();
            let correct = predicted == ground_truth;
            // z is a pure function of the two labels.
            prop_assert_eq!(correct, pred == gt);
        }
    }
}
