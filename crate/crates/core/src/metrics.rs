//! Metrics scoring uncertainty estimates against verification correctness.
//!
//! The binary event under evaluation is "the greedy verification was correct"
//! (z = 1). Uncertainty scores are oriented higher = more uncertain, so a good
//! estimator assigns low scores to correct steps. AUROC uses the rank
//! (Mann-Whitney) formulation with ties counted 1/2; AUPRC is the trapezoidal
//! area under the precision-recall curve swept over the ranking; Rejection-F1
//! keeps the most confident X% of steps and reports error-class F1 on them.

use crate::estimators::random_baseline;
use crate::types::{
    CurvePoint, EstimatorId, EstimatorReport, EvalReport, GlobalStats, Label, MetricSummary,
    StepCase, StepVerification, UncertaintyRecord,
};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("metric undefined: only one correctness class present")]
    SingleClass,
    #[error("metric undefined: empty input")]
    EmptyInput,
    #[error("AU-F1C undefined: curve does not span [0.3, 1.0]")]
    InsufficientCoverageSpan,
    #[error("case {case_id} has no matching {missing}")]
    JoinFailure { case_id: String, missing: String },
}

/// One step with its uncertainty score and verification outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredStep {
    pub case_id: String,
    pub uncertainty: f64,
    pub correct: bool,
    pub predicted_label: Label,
    pub ground_truth: Label,
}

impl ScoredStep {
    pub fn new(
        case_id: impl Into<String>,
        uncertainty: f64,
        predicted_label: Label,
        ground_truth: Label,
    ) -> Self {
        Self {
            case_id: case_id.into(),
            uncertainty,
            correct: predicted_label == ground_truth,
            predicted_label,
            ground_truth,
        }
    }
}

/// One point of a single-run rejection curve.
#[derive(Debug, Clone, PartialEq)]
pub struct RejectionPoint {
    pub coverage: f64,
    pub f1: f64,
    pub n_retained: usize,
}

/// Coverage grid used for AU-F1C integration: 30% to 100% in 2-point steps.
pub fn internal_coverage_grid() -> Vec<f64> {
    (30..=100).step_by(2).map(|p| p as f64 / 100.0).collect()
}

/// Coverage grid reported in tables and plots: 60% to 100% in 4-point steps.
pub fn display_coverage_grid() -> Vec<f64> {
    (60..=100).step_by(4).map(|p| p as f64 / 100.0).collect()
}

/// Probability that a random correct step has strictly lower uncertainty than
/// a random incorrect step, ties counted 1/2.
///
/// Computed via the rank-sum of the incorrect class with average ranks over
/// tie groups, which keeps the numerator an exact half-integer.
pub fn auroc(scored: &[ScoredStep]) -> Result<f64, MetricError> {
    if scored.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let n_correct = scored.iter().filter(|s| s.correct).count();
    let n_incorrect = scored.len() - n_correct;
    if n_correct == 0 || n_incorrect == 0 {
        return Err(MetricError::SingleClass);
    }

    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| scored[a].uncertainty.total_cmp(&scored[b].uncertainty));

    // Average rank per tie group, 1-indexed.
    let n = order.len();
    let mut rank_sum_incorrect = 0.0f64;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n
            && scored[order[j]].uncertainty.total_cmp(&scored[order[i]].uncertainty)
                == std::cmp::Ordering::Equal
        {
            j += 1;
        }
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            if !scored[idx].correct {
                rank_sum_incorrect += avg_rank;
            }
        }
        i = j;
    }

    let u = rank_sum_incorrect - (n_incorrect * (n_incorrect + 1)) as f64 / 2.0;
    Ok(u / (n_correct as f64 * n_incorrect as f64))
}

/// Trapezoidal area under the precision-recall curve for the event z = 1,
/// ranked by confidence (ascending uncertainty).
///
/// Steps with equal uncertainty enter as one block. The curve is anchored at
/// recall 0 with the precision of the first block, which makes a constant
/// scoring integrate to the positive rate.
pub fn auprc(scored: &[ScoredStep]) -> Result<f64, MetricError> {
    if scored.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let n_correct = scored.iter().filter(|s| s.correct).count();
    let n_incorrect = scored.len() - n_correct;
    if n_correct == 0 || n_incorrect == 0 {
        return Err(MetricError::SingleClass);
    }

    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| scored[a].uncertainty.total_cmp(&scored[b].uncertainty));

    let total_pos = n_correct as f64;
    let mut points: Vec<(f64, f64)> = Vec::new();
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len()
            && scored[order[j]].uncertainty.total_cmp(&scored[order[i]].uncertainty)
                == std::cmp::Ordering::Equal
        {
            j += 1;
        }
        for &idx in &order[i..j] {
            if scored[idx].correct {
                tp += 1;
            } else {
                fp += 1;
            }
        }
        points.push((tp as f64 / total_pos, tp as f64 / (tp + fp) as f64));
        i = j;
    }

    let anchor = (0.0, points[0].1);
    let mut area = 0.0;
    let mut prev = anchor;
    for &(r, p) in &points {
        area += (r - prev.0) * (p + prev.1) / 2.0;
        prev = (r, p);
    }
    Ok(area)
}

/// F1 of predicted vs ground-truth labels with positive class = error.
///
/// F1 = 0 when precision + recall = 0 (the zero-division convention).
pub fn f1_error_class(scored: &[ScoredStep]) -> f64 {
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fn_ = 0usize;
    for s in scored {
        match (s.predicted_label, s.ground_truth) {
            (Label::Error, Label::Error) => tp += 1,
            (Label::Error, Label::NoError) => fp += 1,
            (Label::NoError, Label::Error) => fn_ += 1,
            (Label::NoError, Label::NoError) => {}
        }
    }
    let precision = if tp + fp == 0 {
        0.0
    } else {
        tp as f64 / (tp + fp) as f64
    };
    let recall = if tp + fn_ == 0 {
        0.0
    } else {
        tp as f64 / (tp + fn_) as f64
    };
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Fraction of steps where the greedy prediction matched the ground truth.
pub fn verification_accuracy(scored: &[ScoredStep]) -> f64 {
    if scored.is_empty() {
        return 0.0;
    }
    scored.iter().filter(|s| s.correct).count() as f64 / scored.len() as f64
}

/// Fraction of steps whose ground-truth label is error.
pub fn positive_rate(scored: &[ScoredStep]) -> f64 {
    if scored.is_empty() {
        return 0.0;
    }
    scored.iter().filter(|s| s.ground_truth.is_error()).count() as f64 / scored.len() as f64
}

/// Number of steps retained at a coverage fraction: ceil(X * n), guarded
/// against float fuzz on exact multiples.
fn retained_count(coverage: f64, n: usize) -> usize {
    let k = (coverage * n as f64 - 1e-9).ceil() as usize;
    k.clamp(1, n)
}

/// Error-class F1 on the most confident X% of steps for each coverage value.
///
/// Retention keeps the ceil(X * n) lowest-uncertainty steps; ties are broken
/// by case_id so curves are reproducible.
pub fn rejection_curve(scored: &[ScoredStep], thresholds: &[f64]) -> Vec<RejectionPoint> {
    if scored.is_empty() {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| {
        scored[a]
            .uncertainty
            .total_cmp(&scored[b].uncertainty)
            .then_with(|| scored[a].case_id.cmp(&scored[b].case_id))
    });

    let mut coverages: Vec<f64> = thresholds.to_vec();
    coverages.sort_by(|a, b| a.total_cmp(b));
    coverages.dedup();

    coverages
        .into_iter()
        .map(|coverage| {
            let k = retained_count(coverage, scored.len());
            let retained: Vec<ScoredStep> =
                order[..k].iter().map(|&i| scored[i].clone()).collect();
            RejectionPoint {
                coverage,
                f1: f1_error_class(&retained),
                n_retained: k,
            }
        })
        .collect()
}

/// Normalized trapezoidal mean of Rejection-F1 over the 30%-100% coverage
/// band. The curve must span the whole band.
pub fn au_f1c(curve: &[RejectionPoint]) -> Result<f64, MetricError> {
    const LO: f64 = 0.30;
    const HI: f64 = 1.00;
    if curve.len() < 2 {
        return Err(MetricError::InsufficientCoverageSpan);
    }
    let mut pts: Vec<(f64, f64)> = curve.iter().map(|p| (p.coverage, p.f1)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pts[0].0 > LO + 1e-9 || pts[pts.len() - 1].0 < HI - 1e-9 {
        return Err(MetricError::InsufficientCoverageSpan);
    }

    // Piecewise-linear integral of f1 over coverage, clipped to [LO, HI].
    let mut area = 0.0;
    for w in pts.windows(2) {
        let (x0, y0) = w[0];
        let (x1, y1) = w[1];
        if x1 <= LO || x0 >= HI || x1 <= x0 {
            continue;
        }
        let a = x0.max(LO);
        let b = x1.min(HI);
        let ya = y0 + (y1 - y0) * (a - x0) / (x1 - x0);
        let yb = y0 + (y1 - y0) * (b - x0) / (x1 - x0);
        area += (b - a) * (ya + yb) / 2.0;
    }
    Ok(area / (HI - LO))
}

/// Join table mapping each verified step to its outcome labels.
#[derive(Debug, Clone)]
pub struct JoinedStep {
    pub case_id: String,
    pub predicted_label: Label,
    pub ground_truth: Label,
}

/// Join verifications with their cases, failing on dangling case ids.
pub fn join_cases(
    cases: &[StepCase],
    verifications: &[StepVerification],
) -> Result<Vec<JoinedStep>, MetricError> {
    let by_id: BTreeMap<&str, &StepCase> =
        cases.iter().map(|c| (c.case_id.as_str(), c)).collect();
    verifications
        .iter()
        .map(|v| {
            let case = by_id.get(v.case_id.as_str()).ok_or_else(|| {
                MetricError::JoinFailure {
                    case_id: v.case_id.clone(),
                    missing: "StepCase".to_string(),
                }
            })?;
            Ok(JoinedStep {
                case_id: v.case_id.clone(),
                predicted_label: v.predicted_label,
                ground_truth: case.ground_truth,
            })
        })
        .collect()
}

fn scored_from_scores(
    joined: &[JoinedStep],
    scores: &BTreeMap<&str, f64>,
) -> Vec<ScoredStep> {
    joined
        .iter()
        .filter_map(|j| {
            scores.get(j.case_id.as_str()).map(|&u| {
                ScoredStep::new(j.case_id.clone(), u, j.predicted_label, j.ground_truth)
            })
        })
        .collect()
}

struct SingleRun {
    auroc: Option<f64>,
    auprc: Option<f64>,
    au_f1c: Option<f64>,
    curve: Vec<RejectionPoint>,
}

fn run_metrics(scored: &[ScoredStep], grid: &[f64]) -> SingleRun {
    let curve = rejection_curve(scored, grid);
    SingleRun {
        auroc: auroc(scored).ok(),
        auprc: auprc(scored).ok(),
        au_f1c: au_f1c(&curve).ok(),
        curve,
    }
}

fn summarize(values: &[Option<f64>]) -> Option<MetricSummary> {
    let vals: Vec<f64> = values.iter().copied().flatten().collect();
    if vals.len() != values.len() || vals.is_empty() {
        return None;
    }
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let std = if vals.len() < 2 {
        0.0
    } else {
        let var =
            vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (vals.len() - 1) as f64;
        var.sqrt()
    };
    Some(MetricSummary { mean, std })
}

fn aggregate_runs(
    estimator: EstimatorId,
    n_used: usize,
    n_excluded: usize,
    runs: Vec<SingleRun>,
) -> EstimatorReport {
    let n_runs = runs.len();
    let auroc = summarize(&runs.iter().map(|r| r.auroc).collect::<Vec<_>>());
    let auprc = summarize(&runs.iter().map(|r| r.auprc).collect::<Vec<_>>());
    let au_f1c = summarize(&runs.iter().map(|r| r.au_f1c).collect::<Vec<_>>());

    let mut rejection_curve = Vec::new();
    if let Some(first) = runs.first() {
        for (i, pt) in first.curve.iter().enumerate() {
            let f1s: Vec<f64> = runs.iter().map(|r| r.curve[i].f1).collect();
            let mean = f1s.iter().sum::<f64>() / f1s.len() as f64;
            let std = if f1s.len() < 2 {
                0.0
            } else {
                (f1s.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                    / (f1s.len() - 1) as f64)
                    .sqrt()
            };
            rejection_curve.push(CurvePoint {
                coverage: pt.coverage,
                f1: mean,
                f1_std: std,
                n_retained: pt.n_retained,
            });
        }
    }

    EstimatorReport {
        estimator,
        n_used,
        n_excluded,
        n_runs,
        auroc,
        auprc,
        au_f1c,
        rejection_curve,
    }
}

/// Number of evaluation repetitions for seed-dependent estimators.
pub const STOCHASTIC_EVAL_RUNS: u64 = 5;

/// Build the full evaluation report from uncertainty records.
///
/// Steps without a score from an estimator are excluded pairwise for that
/// estimator, with counts reported. Seed-dependent estimators are re-scored
/// over [`STOCHASTIC_EVAL_RUNS`] seeds starting at `base_seed`; deterministic
/// estimators run once with std reported as 0.
pub fn build_eval_report(
    cases: &[StepCase],
    verifications: &[StepVerification],
    records: &[UncertaintyRecord],
    base_seed: u64,
    grid: &[f64],
) -> Result<EvalReport, MetricError> {
    let joined = join_cases(cases, verifications)?;
    let all_scored: Vec<ScoredStep> = joined
        .iter()
        .map(|j| ScoredStep::new(j.case_id.clone(), 0.0, j.predicted_label, j.ground_truth))
        .collect();
    let global = GlobalStats {
        n_steps: all_scored.len(),
        verification_accuracy: verification_accuracy(&all_scored),
        verification_f1: f1_error_class(&all_scored),
        positive_rate: positive_rate(&all_scored),
    };

    let mut by_estimator: BTreeMap<EstimatorId, BTreeMap<&str, f64>> = BTreeMap::new();
    for r in records {
        by_estimator
            .entry(r.estimator)
            .or_default()
            .insert(r.case_id.as_str(), r.score);
    }

    let mut estimators = Vec::new();
    for id in EstimatorId::ALL {
        let Some(scores) = by_estimator.get(&id) else {
            continue;
        };
        let scored = scored_from_scores(&joined, scores);
        let n_used = scored.len();
        let n_excluded = joined.len() - n_used;

        let runs = if id.is_stochastic() {
            (0..STOCHASTIC_EVAL_RUNS)
                .map(|offset| {
                    let rescored: Vec<ScoredStep> = scored
                        .iter()
                        .map(|s| {
                            let u = random_baseline(base_seed + offset, &s.case_id);
                            ScoredStep::new(
                                s.case_id.clone(),
                                u,
                                s.predicted_label,
                                s.ground_truth,
                            )
                        })
                        .collect();
                    run_metrics(&rescored, grid)
                })
                .collect()
        } else {
            vec![run_metrics(&scored, grid)]
        };

        estimators.push(aggregate_runs(id, n_used, n_excluded, runs));
    }

    Ok(EvalReport { global, estimators })
}
