//! Parsing judge responses and reading class probabilities at the decision
//! token.

use crate::types::{Label, PredictiveDistribution};
use serde_json::Value;

/// Outcome of parsing one raw judge response.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedResponse {
    pub rationale: String,
    pub decision: Option<Label>,
    pub parse_ok: bool,
    /// Absolute byte offset of the first alphabetic character of the
    /// has_error value inside the raw text, when locatable.
    pub decision_value_offset: Option<usize>,
}

impl ParsedResponse {
    fn failure() -> Self {
        Self {
            rationale: String::new(),
            decision: None,
            parse_ok: false,
            decision_value_offset: None,
        }
    }
}

/// Leading alphabetic run of a token, lowercased, skipping any non-alphabetic
/// prefix (whitespace, quotes, tokenizer markers).
pub fn normalized_word(token: &str) -> String {
    token
        .chars()
        .skip_while(|c| !c.is_alphabetic())
        .take_while(|c| c.is_alphabetic())
        .flat_map(|c| c.to_lowercase())
        .collect()
}

fn decision_from_word(word: &str) -> Option<Label> {
    match normalized_word(word).as_str() {
        "yes" => Some(Label::Error),
        "no" => Some(Label::NoError),
        _ => None,
    }
}

/// Find the balanced `{...}` slice starting at `start`, respecting strings.
fn balanced_object(text: &str, start: usize) -> Option<&str> {
    let bytes = text.as_bytes();
    debug_assert_eq!(bytes[start], b'{');
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate().skip(start) {
        if in_string {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_string = false;
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(&text[start..=i]);
                }
            }
            _ => {}
        }
    }
    None
}

/// Byte offset of the first alphabetic char of the has_error value, relative
/// to the raw text as a whole.
fn find_decision_offset(object_start: usize, object: &str) -> Option<usize> {
    let key_pos = object.find("\"has_error\"")?;
    let after_key = &object[key_pos + "\"has_error\"".len()..];
    let rel = after_key.char_indices().find_map(|(i, c)| {
        if c.is_alphabetic() {
            Some(i)
        } else if c == ':' || c == '"' || c.is_whitespace() {
            None
        } else {
            // Unexpected punctuation before the value; give up.
            Some(usize::MAX)
        }
    })?;
    if rel == usize::MAX {
        return None;
    }
    Some(object_start + key_pos + "\"has_error\"".len() + rel)
}

/// Extract (rationale, decision, parse_ok) from a raw judge response.
///
/// Scans for the first well-formed JSON object carrying a recognizable
/// has_error value, tolerating surrounding prose and code fences. Never
/// fails hard: an unusable response comes back with parse_ok = false.
pub fn parse_response(raw: &str) -> ParsedResponse {
    let mut search_from = 0usize;
    while let Some(rel) = raw[search_from..].find('{') {
        let start = search_from + rel;
        let Some(object) = balanced_object(raw, start) else {
            search_from = start + 1;
            continue;
        };
        if let Ok(Value::Object(map)) = serde_json::from_str::<Value>(object) {
            let has_error = map.get("has_error").and_then(|v| match v {
                Value::String(s) => decision_from_word(s),
                Value::Bool(b) => Some(if *b { Label::Error } else { Label::NoError }),
                _ => None,
            });
            if let Some(decision) = has_error {
                let rationale = map
                    .get("reasoning")
                    .and_then(|v| v.as_str())
                    .unwrap_or_default()
                    .to_string();
                return ParsedResponse {
                    rationale,
                    decision: Some(decision),
                    parse_ok: true,
                    decision_value_offset: find_decision_offset(start, object),
                };
            }
        }
        search_from = start + 1;
    }
    ParsedResponse::failure()
}

/// Sum the probability mass over top-k variants matching each class word.
///
/// A variant matches when its leading alphabetic run equals the class word
/// case-insensitively, so "yes", "Yes" and " yes" all count toward the same
/// class. Returns `None` when neither class appears in the pairs.
pub fn class_masses(
    pairs: &[(String, f64)],
    positive_word: &str,
    negative_word: &str,
    epsilon: f64,
) -> Option<(f64, f64)> {
    let mut pos_mass = 0.0f64;
    let mut neg_mass = 0.0f64;
    let mut pos_seen = false;
    let mut neg_seen = false;
    for (token, logprob) in pairs {
        let word = normalized_word(token);
        if word == positive_word {
            pos_mass += logprob.exp();
            pos_seen = true;
        } else if word == negative_word {
            neg_mass += logprob.exp();
            neg_seen = true;
        }
    }
    if !pos_seen && !neg_seen {
        return None;
    }
    let pos = if pos_seen { pos_mass } else { epsilon };
    let neg = if neg_seen { neg_mass } else { epsilon };
    Some((pos.min(1.0), neg.min(1.0)))
}

/// Read the two-class distribution from the top-k pairs of the decision
/// token, flooring the absent class at `epsilon`.
///
/// Returns the floored raw masses (yes, no) and their normalization; `None`
/// when neither class word is present.
pub fn extract_class_probs(
    pairs: &[(String, f64)],
    epsilon: f64,
) -> Option<(f64, f64, PredictiveDistribution)> {
    let (yes_mass, no_mass) = class_masses(pairs, "yes", "no", epsilon)?;
    let dist = PredictiveDistribution::from_class_masses(no_mass, yes_mass)?;
    Some((yes_mass, no_mass, dist))
}

/// Index of the token containing the given byte offset, when the token texts
/// concatenate back to the full response.
pub fn token_at_offset(tokens: &[super::client::TokenLogProb], offset: usize) -> Option<usize> {
    let mut cursor = 0usize;
    for (i, t) in tokens.iter().enumerate() {
        let end = cursor + t.token.len();
        if offset < end {
            return Some(i);
        }
        cursor = end;
    }
    None
}
