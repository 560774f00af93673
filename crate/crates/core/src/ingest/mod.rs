//! Parsing process-supervision annotations into step cases.
//!
//! The canonical ingest format is line-delimited JSON, one annotated solution
//! per line: `{"id": ..., "question": ..., "steps": [{"text", "rating"}]}`.
//! Rater labels are -1 (negative), 0 (neutral) or +1 (positive); the negative
//! class maps to the error label y = 1 and everything else to y = 0. Traces
//! are truncated at the first error. The [`prm800k`] adapter maps the public
//! phase-2 field names onto this shape.

pub mod prm800k;

use crate::types::{Label, StepCase};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One rater-annotated step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawStep {
    pub text: String,
    pub rating: i8,
}

/// One annotated solution: a question plus its rated steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawAnnotation {
    /// Stable identifier; assigned from the line number when absent.
    #[serde(default)]
    pub id: Option<String>,
    pub question: String,
    pub steps: Vec<RawStep>,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{locator}: rater label must be -1, 0 or +1, got {value}")]
    BadLabel { locator: String, value: i8 },
    #[error("{locator}: solution has no steps")]
    EmptySolution { locator: String },
    #[error("subset requests {requested} questions but only {available} are available")]
    SubsetTooLarge { requested: usize, available: usize },
    #[error("subset id {0:?} not present in the input")]
    UnknownSubsetId(String),
}

/// Which questions to keep.
#[derive(Debug, Clone, PartialEq)]
pub enum SubsetSpec {
    All,
    /// Sample this many questions uniformly without replacement.
    Count(usize),
    /// Keep exactly these solution ids.
    Ids(Vec<String>),
}

/// Ingest summary in the shape reported for the curated subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub questions: usize,
    pub steps: usize,
    pub positives: usize,
    pub positive_rate: f64,
    pub mean_steps_per_solution: f64,
    /// Solution ids retained by the subset, for reproducibility.
    pub retained_ids: Vec<String>,
    /// Malformed records skipped (zero in strict mode, which aborts instead).
    pub skipped: usize,
}

/// Map a rater label onto the error label: -1 means the step is wrong.
pub fn map_label(rater_label: i8) -> Result<Label, i8> {
    match rater_label {
        -1 => Ok(Label::Error),
        0 | 1 => Ok(Label::NoError),
        other => Err(other),
    }
}

/// Truncate a labelled trace at the first error, inclusive.
pub fn truncate_at_first_error<T: Clone>(steps: &[(T, Label)]) -> Vec<(T, Label)> {
    match steps.iter().position(|(_, l)| l.is_error()) {
        Some(i) => steps[..=i].to_vec(),
        None => steps.to_vec(),
    }
}

fn solution_id_for(raw: &RawAnnotation, line: usize) -> String {
    raw.id.clone().unwrap_or_else(|| format!("q{line:06}"))
}

fn cases_for_solution(
    raw: &RawAnnotation,
    solution_id: &str,
) -> Result<Vec<StepCase>, IngestError> {
    if raw.steps.is_empty() {
        return Err(IngestError::EmptySolution {
            locator: solution_id.to_string(),
        });
    }
    let labelled: Vec<(String, Label)> = raw
        .steps
        .iter()
        .enumerate()
        .map(|(i, s)| {
            map_label(s.rating)
                .map(|l| (s.text.clone(), l))
                .map_err(|value| IngestError::BadLabel {
                    locator: format!("{solution_id} step {}", i + 1),
                    value,
                })
        })
        .collect::<Result<_, _>>()?;
    let truncated = truncate_at_first_error(&labelled);

    let mut preceding: Vec<String> = Vec::new();
    let mut cases = Vec::with_capacity(truncated.len());
    for (i, (text, label)) in truncated.into_iter().enumerate() {
        let step_index = i + 1;
        cases.push(StepCase {
            case_id: format!("{solution_id}#s{step_index:03}"),
            solution_id: solution_id.to_string(),
            question: raw.question.clone(),
            preceding_steps: preceding.clone(),
            candidate_step: text.clone(),
            step_index,
            ground_truth: label,
        });
        preceding.push(text);
    }
    Ok(cases)
}

fn select_ids(
    ids: &[String],
    subset: &SubsetSpec,
    seed: u64,
) -> Result<Vec<String>, IngestError> {
    match subset {
        SubsetSpec::All => Ok(ids.to_vec()),
        SubsetSpec::Count(n) => {
            if *n > ids.len() {
                return Err(IngestError::SubsetTooLarge {
                    requested: *n,
                    available: ids.len(),
                });
            }
            let mut sorted: Vec<String> = ids.to_vec();
            sorted.sort();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut chosen: Vec<String> =
                sorted.choose_multiple(&mut rng, *n).cloned().collect();
            chosen.sort();
            Ok(chosen)
        }
        SubsetSpec::Ids(wanted) => {
            for id in wanted {
                if !ids.contains(id) {
                    return Err(IngestError::UnknownSubsetId(id.clone()));
                }
            }
            let mut chosen = wanted.clone();
            chosen.sort();
            chosen.dedup();
            Ok(chosen)
        }
    }
}

/// Build step cases from annotated solutions.
///
/// Deterministic for a fixed (input, subset, seed): subsetting samples
/// solution ids without replacement from the seeded generator, and output is
/// sorted by (solution_id, step_index). Malformed solutions are skipped and
/// counted unless `strict`, in which case the first one aborts the build.
pub fn build_cases(
    raw: &[RawAnnotation],
    subset: &SubsetSpec,
    seed: u64,
    strict: bool,
) -> Result<(Vec<StepCase>, IngestSummary), IngestError> {
    let mut skipped = 0usize;
    let mut solutions: Vec<(String, Vec<StepCase>)> = Vec::new();
    for (line, annotation) in raw.iter().enumerate() {
        let solution_id = solution_id_for(annotation, line + 1);
        match cases_for_solution(annotation, &solution_id) {
            Ok(cases) => solutions.push((solution_id, cases)),
            Err(err) if strict => return Err(err),
            Err(err) => {
                log::warn!("skipping malformed solution: {err}");
                skipped += 1;
            }
        }
    }

    let ids: Vec<String> = solutions.iter().map(|(id, _)| id.clone()).collect();
    let retained_ids = select_ids(&ids, subset, seed)?;

    let mut cases: Vec<StepCase> = solutions
        .into_iter()
        .filter(|(id, _)| retained_ids.binary_search(id).is_ok())
        .flat_map(|(_, cases)| cases)
        .collect();
    cases.sort_by(|a, b| {
        a.solution_id
            .cmp(&b.solution_id)
            .then(a.step_index.cmp(&b.step_index))
    });

    let steps = cases.len();
    let positives = cases.iter().filter(|c| c.ground_truth.is_error()).count();
    let questions = retained_ids.len();
    let summary = IngestSummary {
        questions,
        steps,
        positives,
        positive_rate: if steps == 0 {
            0.0
        } else {
            positives as f64 / steps as f64
        },
        mean_steps_per_solution: if questions == 0 {
            0.0
        } else {
            steps as f64 / questions as f64
        },
        retained_ids,
        skipped,
    };
    Ok((cases, summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::validate_trace;

    fn annotation(id: &str, ratings: &[i8]) -> RawAnnotation {
        RawAnnotation {
            id: Some(id.to_string()),
            question: format!("question for {id}"),
            steps: ratings
                .iter()
                .enumerate()
                .map(|(i, &r)| RawStep {
                    text: format!("{id} step {}", i + 1),
                    rating: r,
                })
                .collect(),
        }
    }

    #[test]
    fn label_mapping() {
        assert_eq!(map_label(-1), Ok(Label::Error));
        assert_eq!(map_label(0), Ok(Label::NoError));
        assert_eq!(map_label(1), Ok(Label::NoError));
        assert_eq!(map_label(2), Err(2));
        assert_eq!(map_label(-3), Err(-3));
    }

    #[test]
    fn truncation_at_first_error() {
        let l = |bits: &[u8]| -> Vec<(usize, Label)> {
            bits.iter()
                .enumerate()
                .map(|(i, &b)| (i, Label::try_from(b).unwrap()))
                .collect()
        };
        let bits = |steps: &[(usize, Label)]| -> Vec<u8> {
            steps.iter().map(|(_, l)| l.as_bit()).collect()
        };
        assert_eq!(bits(&truncate_at_first_error(&l(&[0, 0, 1, 0, 0]))), [0, 0, 1]);
        assert_eq!(bits(&truncate_at_first_error(&l(&[0, 0, 0]))), [0, 0, 0]);
        assert_eq!(bits(&truncate_at_first_error(&l(&[1, 0]))), [1]);
    }

    #[test]
    fn two_step_solution_builds_two_cases() {
        let raw = vec![annotation("q1", &[1, -1])];
        let (cases, summary) = build_cases(&raw, &SubsetSpec::All, 0, true).unwrap();
        assert_eq!(cases.len(), 2);
        assert_eq!(cases[0].ground_truth, Label::NoError);
        assert_eq!(cases[1].ground_truth, Label::Error);
        assert_eq!(cases[1].preceding_steps, vec!["q1 step 1".to_string()]);
        assert_eq!(summary.positives, 1);
        assert!((summary.positive_rate - 0.5).abs() < 1e-12);
    }

    #[test]
    fn build_is_deterministic() {
        let raw: Vec<RawAnnotation> = (0..20)
            .map(|i| annotation(&format!("q{i:03}"), &[1, 0, -1]))
            .collect();
        let a = build_cases(&raw, &SubsetSpec::Count(7), 9, true).unwrap();
        let b = build_cases(&raw, &SubsetSpec::Count(7), 9, true).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
        let c = build_cases(&raw, &SubsetSpec::Count(7), 10, true).unwrap();
        assert_ne!(a.1.retained_ids, c.1.retained_ids);
    }

    #[test]
    fn output_traces_validate() {
        let raw = vec![
            annotation("q1", &[1, 0, -1, 1, 1]),
            annotation("q2", &[0, 0]),
            annotation("q3", &[-1]),
        ];
        let (cases, _) = build_cases(&raw, &SubsetSpec::All, 0, true).unwrap();
        for id in ["q1", "q2", "q3"] {
            let trace: Vec<StepCase> = cases
                .iter()
                .filter(|c| c.solution_id == id)
                .cloned()
                .collect();
            assert!(validate_trace(&trace).is_empty(), "trace {id} invalid");
        }
    }

    #[test]
    fn positive_rate_exact() {
        let raw = vec![annotation("q1", &[0, -1]), annotation("q2", &[0, 0, 0])];
        let (_, summary) = build_cases(&raw, &SubsetSpec::All, 0, true).unwrap();
        assert_eq!(summary.steps, 5);
        assert_eq!(summary.positives, 1);
        assert_eq!(summary.positive_rate, 1.0 / 5.0);
    }

    #[test]
    fn bad_label_skips_or_aborts() {
        let mut raw = vec![annotation("q1", &[0, 0]), annotation("q2", &[5])];
        raw[1].steps[0].rating = 5;
        let err = build_cases(&raw, &SubsetSpec::All, 0, true).unwrap_err();
        assert!(matches!(err, IngestError::BadLabel { value: 5, .. }));
        let (cases, summary) = build_cases(&raw, &SubsetSpec::All, 0, false).unwrap();
        assert_eq!(summary.skipped, 1);
        assert_eq!(summary.questions, 1);
        assert_eq!(cases.len(), 2);
    }

    #[test]
    fn id_subset_respected() {
        let raw: Vec<RawAnnotation> = (0..5)
            .map(|i| annotation(&format!("q{i}"), &[0, 0]))
            .collect();
        let subset = SubsetSpec::Ids(vec!["q3".to_string(), "q1".to_string()]);
        let (cases, summary) = build_cases(&raw, &subset, 0, true).unwrap();
        assert_eq!(summary.retained_ids, vec!["q1", "q3"]);
        assert!(cases.iter().all(|c| c.solution_id == "q1" || c.solution_id == "q3"));
        let missing = SubsetSpec::Ids(vec!["zz".to_string()]);
        assert!(matches!(
            build_cases(&raw, &missing, 0, true),
            Err(IngestError::UnknownSubsetId(_))
        ));
    }
}
