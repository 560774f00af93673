//! Judge-LM clients: a chat-completions wire client and a scripted mock.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Duration;
use thiserror::Error;

use super::JudgeConfig;

/// Environment variable holding the bearer token for wire requests.
pub const API_KEY_ENV: &str = "STEPUQ_API_KEY";

/// Which sample of a step a request belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum SampleSlot {
    /// Low-temperature prediction sample.
    Greedy,
    /// High-temperature sample with the given index.
    Diverse(u32),
    /// Self-reflection call used by the P(True) estimator.
    PTrue,
}

impl fmt::Display for SampleSlot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SampleSlot::Greedy => f.write_str("greedy"),
            SampleSlot::Diverse(i) => write!(f, "d{i}"),
            SampleSlot::PTrue => f.write_str("ptrue"),
        }
    }
}

impl FromStr for SampleSlot {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "greedy" => Ok(SampleSlot::Greedy),
            "ptrue" => Ok(SampleSlot::PTrue),
            other => other
                .strip_prefix('d')
                .and_then(|rest| rest.parse::<u32>().ok())
                .map(SampleSlot::Diverse)
                .ok_or_else(|| format!("unknown sample slot {other:?}")),
        }
    }
}

impl From<SampleSlot> for String {
    fn from(s: SampleSlot) -> String {
        s.to_string()
    }
}

impl TryFrom<String> for SampleSlot {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

/// One generation request.
#[derive(Debug, Clone, PartialEq)]
pub struct CompletionRequest {
    pub prompt: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub top_logprobs: u32,
}

/// Log probability of one generated token plus its top-k alternatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenLogProb {
    pub token: String,
    pub logprob: f64,
    #[serde(default)]
    pub top: Vec<(String, f64)>,
}

/// Decoded generation: text plus per-token log probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionResponse {
    pub text: String,
    #[serde(default)]
    pub tokens: Vec<TokenLogProb>,
}

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("transport failure after retries: {0}")]
    Transport(String),
    #[error("endpoint returned status {status}: {body}")]
    Http { status: u16, body: String },
    #[error("no scripted response for case {case_id} slot {slot}")]
    MissingScript { case_id: String, slot: SampleSlot },
    #[error("malformed response: {0}")]
    Malformed(String),
}

/// A judge-LM reachable one request at a time. Implementations must be safe
/// to share across sampling workers.
pub trait JudgeClient: Send + Sync {
    fn complete(
        &self,
        case_id: &str,
        slot: SampleSlot,
        request: &CompletionRequest,
    ) -> Result<CompletionResponse, ClientError>;
}

/// One line of a scripted-response file, keyed by (case_id, slot).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedResponse {
    pub case_id: String,
    pub slot: SampleSlot,
    pub text: String,
    #[serde(default)]
    pub tokens: Vec<TokenLogProb>,
}

/// Mock judge that replays scripted responses.
#[derive(Debug, Default)]
pub struct MockJudgeClient {
    responses: HashMap<(String, SampleSlot), CompletionResponse>,
}

impl MockJudgeClient {
    pub fn from_records(records: impl IntoIterator<Item = ScriptedResponse>) -> Self {
        let responses = records
            .into_iter()
            .map(|r| {
                (
                    (r.case_id, r.slot),
                    CompletionResponse {
                        text: r.text,
                        tokens: r.tokens,
                    },
                )
            })
            .collect();
        Self { responses }
    }

    pub fn from_path(path: &Path) -> Result<Self, ClientError> {
        let records: Vec<ScriptedResponse> = crate::io::read_jsonl(path)
            .map_err(|e| ClientError::Malformed(format!("{}: {e}", path.display())))?;
        Ok(Self::from_records(records))
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }
}

impl JudgeClient for MockJudgeClient {
    fn complete(
        &self,
        case_id: &str,
        slot: SampleSlot,
        _request: &CompletionRequest,
    ) -> Result<CompletionResponse, ClientError> {
        self.responses
            .get(&(case_id.to_string(), slot))
            .cloned()
            .ok_or_else(|| ClientError::MissingScript {
                case_id: case_id.to_string(),
                slot,
            })
    }
}

// Chat-completions wire format, request side.
#[derive(Serialize)]
struct WireMessage<'a> {
    role: &'static str,
    content: &'a str,
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    messages: [WireMessage<'a>; 1],
    temperature: f64,
    max_tokens: u32,
    logprobs: bool,
    top_logprobs: u32,
}

// Response side; unknown fields ignored.
#[derive(Deserialize)]
struct WireTopLogProb {
    token: String,
    logprob: f64,
}

#[derive(Deserialize)]
struct WireTokenLogProb {
    token: String,
    logprob: f64,
    #[serde(default)]
    top_logprobs: Vec<WireTopLogProb>,
}

#[derive(Deserialize, Default)]
struct WireLogProbs {
    #[serde(default)]
    content: Vec<WireTokenLogProb>,
}

#[derive(Deserialize)]
struct WireChatMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireChatMessage,
    #[serde(default)]
    logprobs: Option<WireLogProbs>,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
}

/// HTTP judge speaking the chat-completions protocol with per-token top-k
/// log probabilities. Retries transient failures with exponential backoff.
pub struct HttpJudgeClient {
    http: reqwest::blocking::Client,
    endpoint: String,
    model: String,
    api_key: Option<String>,
    max_retries: u32,
}

impl HttpJudgeClient {
    pub fn new(cfg: &JudgeConfig) -> Result<Self, ClientError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(cfg.request_timeout_secs))
            .build()
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        Ok(Self {
            http,
            endpoint: cfg.endpoint.clone(),
            model: cfg.model.clone(),
            api_key: std::env::var(API_KEY_ENV).ok(),
            max_retries: cfg.max_retries,
        })
    }

    fn send_once(&self, request: &CompletionRequest) -> Result<CompletionResponse, ClientError> {
        let body = WireRequest {
            model: &self.model,
            messages: [WireMessage {
                role: "user",
                content: &request.prompt,
            }],
            temperature: request.temperature,
            max_tokens: request.max_tokens,
            logprobs: true,
            top_logprobs: request.top_logprobs,
        };
        let mut req = self.http.post(&self.endpoint).json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req
            .send()
            .map_err(|e| ClientError::Transport(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            let body = resp.text().unwrap_or_default();
            return Err(ClientError::Http {
                status: status.as_u16(),
                body: body.chars().take(512).collect(),
            });
        }
        let wire: WireResponse = resp
            .json()
            .map_err(|e| ClientError::Malformed(e.to_string()))?;
        let choice = wire
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| ClientError::Malformed("response has no choices".to_string()))?;
        let tokens = choice
            .logprobs
            .unwrap_or_default()
            .content
            .into_iter()
            .map(|t| TokenLogProb {
                token: t.token,
                logprob: t.logprob,
                top: t.top_logprobs.into_iter().map(|p| (p.token, p.logprob)).collect(),
            })
            .collect();
        Ok(CompletionResponse {
            text: choice.message.content.unwrap_or_default(),
            tokens,
        })
    }

    fn retryable(err: &ClientError) -> bool {
        match err {
            ClientError::Transport(_) => true,
            ClientError::Http { status, .. } => {
                *status == 429 || (500..=599).contains(status)
            }
            _ => false,
        }
    }
}

impl JudgeClient for HttpJudgeClient {
    fn complete(
        &self,
        _case_id: &str,
        _slot: SampleSlot,
        request: &CompletionRequest,
    ) -> Result<CompletionResponse, ClientError> {
        let mut last_err = None;
        for attempt in 0..=self.max_retries {
            if attempt > 0 {
                let backoff = Duration::from_millis(200u64.saturating_mul(1 << attempt.min(5)));
                std::thread::sleep(backoff);
            }
            match self.send_once(request) {
                Ok(resp) => return Ok(resp),
                Err(err) if Self::retryable(&err) => {
                    log::warn!("judge request attempt {attempt} failed: {err}");
                    last_err = Some(err);
                }
                Err(err) => return Err(err),
            }
        }
        Err(match last_err {
            Some(ClientError::Http { status, body }) => ClientError::Transport(format!(
                "exhausted retries, last status {status}: {body}"
            )),
            Some(ClientError::Transport(msg)) => {
                ClientError::Transport(format!("exhausted retries: {msg}"))
            }
            _ => ClientError::Transport("exhausted retries".to_string()),
        })
    }
}
