//! Sentence embedders backing the SEU estimator.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("no scripted vector for text starting {0:?}")]
    MissingText(String),
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("malformed embeddings response: {0}")]
    Malformed(String),
}

/// Maps texts to vectors, one vector per input text.
pub trait SentenceEmbedder: Send + Sync {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError>;
}

/// One line of a scripted-embeddings file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedEmbedding {
    pub text: String,
    pub vector: Vec<f64>,
}

/// Mock embedder replaying scripted text-to-vector mappings.
#[derive(Debug, Default, Clone)]
pub struct ScriptedEmbedder {
    vectors: BTreeMap<String, Vec<f64>>,
}

impl ScriptedEmbedder {
    pub fn from_map(vectors: BTreeMap<String, Vec<f64>>) -> Self {
        Self { vectors }
    }

    pub fn from_path(path: &Path) -> Result<Self, EmbedError> {
        let records: Vec<ScriptedEmbedding> = crate::io::read_jsonl(path)
            .map_err(|e| EmbedError::Malformed(format!("{}: {e}", path.display())))?;
        Ok(Self {
            vectors: records.into_iter().map(|r| (r.text, r.vector)).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

impl SentenceEmbedder for ScriptedEmbedder {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
        texts
            .iter()
            .map(|t| {
                self.vectors.get(t).cloned().ok_or_else(|| {
                    EmbedError::MissingText(t.chars().take(48).collect())
                })
            })
            .collect()
    }
}

// Embeddings wire format, mirroring the judge client's endpoint style.
#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    input: &'a [String],
}

#[derive(Deserialize)]
struct WireVector {
    embedding: Vec<f64>,
}

#[derive(Deserialize)]
struct WireResponse {
    data: Vec<WireVector>,
}

/// HTTP embedder posting texts to an embeddings endpoint.
pub struct HttpEmbedder {
    http: reqwest::blocking::Client,
    endpoint: String,
    model: String,
    api_key: Option<String>,
}

impl HttpEmbedder {
    pub fn new(endpoint: String, model: String, timeout_secs: u64) -> Result<Self, EmbedError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(timeout_secs))
            .build()
            .map_err(|e| EmbedError::Transport(e.to_string()))?;
        Ok(Self {
            http,
            endpoint,
            model,
            api_key: std::env::var(crate::judge::client::API_KEY_ENV).ok(),
        })
    }
}

impl SentenceEmbedder for HttpEmbedder {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, EmbedError> {
        let body = WireRequest {
            model: &self.model,
            input: texts,
        };
        let mut req = self.http.post(&self.endpoint).json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req
            .send()
            .map_err(|e| EmbedError::Transport(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(EmbedError::Transport(format!(
                "embeddings endpoint returned status {status}"
            )));
        }
        let wire: WireResponse = resp
            .json()
            .map_err(|e| EmbedError::Malformed(e.to_string()))?;
        Ok(wire.data.into_iter().map(|v| v.embedding).collect())
    }
}
