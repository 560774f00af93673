//! Adapter mapping PRM800K phase-2 records onto the canonical ingest shape.
//!
//! Each input line is one labelled solution. The adapter keeps, per step, the
//! completion the annotation chose: the human-written completion when present
//! (correct by construction, so rated +1), otherwise the completion at
//! `chosen_completion`, falling back to a sole completion when no choice is
//! recorded. Steps whose rating is missing make the record malformed.

use super::{RawAnnotation, RawStep};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AdapterError {
    #[error("{locator}: {reason}")]
    Malformed { locator: String, reason: String },
    #[error("line {line}: invalid JSON: {source}")]
    Json {
        line: usize,
        source: serde_json::Error,
    },
}

#[derive(Deserialize)]
struct Record {
    question: Question,
    label: LabelBlock,
}

#[derive(Deserialize)]
struct Question {
    problem: String,
}

#[derive(Deserialize)]
struct LabelBlock {
    steps: Vec<Step>,
}

#[derive(Deserialize)]
struct Step {
    #[serde(default)]
    completions: Option<Vec<Completion>>,
    #[serde(default)]
    human_completion: Option<Completion>,
    #[serde(default)]
    chosen_completion: Option<usize>,
}

#[derive(Deserialize)]
struct Completion {
    text: String,
    #[serde(default)]
    rating: Option<i8>,
}

fn convert_step(step: &Step, locator: &str) -> Result<RawStep, AdapterError> {
    if let Some(human) = &step.human_completion {
        return Ok(RawStep {
            text: human.text.clone(),
            rating: human.rating.unwrap_or(1),
        });
    }
    let completions = step.completions.as_deref().unwrap_or(&[]);
    let chosen = match step.chosen_completion {
        Some(i) => completions.get(i).ok_or_else(|| AdapterError::Malformed {
            locator: locator.to_string(),
            reason: format!("chosen_completion {i} out of range ({})", completions.len()),
        })?,
        None if completions.len() == 1 => &completions[0],
        None => {
            return Err(AdapterError::Malformed {
                locator: locator.to_string(),
                reason: "no chosen completion".to_string(),
            })
        }
    };
    let rating = chosen.rating.ok_or_else(|| AdapterError::Malformed {
        locator: locator.to_string(),
        reason: "chosen completion has no rating".to_string(),
    })?;
    Ok(RawStep {
        text: chosen.text.clone(),
        rating,
    })
}

/// Convert one phase-2 JSON line into a canonical annotation.
pub fn convert_line(json: &str, line: usize) -> Result<RawAnnotation, AdapterError> {
    let record: Record =
        serde_json::from_str(json).map_err(|source| AdapterError::Json { line, source })?;
    let steps = record
        .label
        .steps
        .iter()
        .enumerate()
        .map(|(i, s)| convert_step(s, &format!("line {line} step {}", i + 1)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RawAnnotation {
        id: Some(format!("q{line:06}")),
        question: record.question.problem,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chosen_completion_carries_text_and_rating() {
        let json = r#"{
            "question": {"problem": "Compute 1+1."},
            "label": {"steps": [
                {"completions": [{"text": "skip", "rating": 0}, {"text": "1+1=2", "rating": 1}],
                 "human_completion": null, "chosen_completion": 1},
                {"completions": [{"text": "done wrong", "rating": -1}],
                 "human_completion": null, "chosen_completion": 0}
            ]}
        }"#;
        let raw = convert_line(json, 3).unwrap();
        assert_eq!(raw.id.as_deref(), Some("q000003"));
        assert_eq!(raw.question, "Compute 1+1.");
        assert_eq!(raw.steps.len(), 2);
        assert_eq!(raw.steps[0].text, "1+1=2");
        assert_eq!(raw.steps[0].rating, 1);
        assert_eq!(raw.steps[1].rating, -1);
    }

    #[test]
    fn human_completion_wins_with_positive_rating() {
        let json = r#"{
            "question": {"problem": "p"},
            "label": {"steps": [
                {"completions": [{"text": "model text", "rating": -1}],
                 "human_completion": {"text": "human text"}, "chosen_completion": null}
            ]}
        }"#;
        let raw = convert_line(json, 1).unwrap();
        assert_eq!(raw.steps[0].text, "human text");
        assert_eq!(raw.steps[0].rating, 1);
    }

    #[test]
    fn sole_completion_used_when_no_choice_recorded() {
        let json = r#"{
            "question": {"problem": "p"},
            "label": {"steps": [
                {"completions": [{"text": "only", "rating": 0}]}
            ]}
        }"#;
        let raw = convert_line(json, 1).unwrap();
        assert_eq!(raw.steps[0].text, "only");
        assert_eq!(raw.steps[0].rating, 0);
    }

    #[test]
    fn missing_rating_is_malformed() {
        let json = r#"{
            "question": {"problem": "p"},
            "label": {"steps": [
                {"completions": [{"text": "unrated"}], "chosen_completion": 0}
            ]}
        }"#;
        let err = convert_line(json, 9).unwrap_err();
        assert!(matches!(err, AdapterError::Malformed { .. }));
        assert!(err.to_string().contains("line 9 step 1"));
    }
}
