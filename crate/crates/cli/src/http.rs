//! Blocking HTTP implementations of the classifier client contracts.
//!
//! Endpoints come from the environment:
//! `CONCERN_API_KEY` (bearer token, or `key` query parameter for toxicity),
//! `CONCERN_DETECTOR_URL`, `CONCERN_CATEGORIZER_URL`, `CONCERN_CATEGORIZER_MODEL`
//! and `CONCERN_TOXICITY_URL`.

use std::time::Duration;

use anyhow::{Context, Result};
use concern_core::classify::{CategorizerClient, ClientError, DetectorClient, PromptText, RawDetection};
use concern_core::sentiment::{ToxicityAttributes, ToxicityProvider};
use reqwest::blocking::{Client, RequestBuilder, Response};
use serde::Deserialize;
use serde_json::{json, Value};

pub const API_KEY_VAR: &str = "CONCERN_API_KEY";
pub const DETECTOR_URL_VAR: &str = "CONCERN_DETECTOR_URL";
pub const CATEGORIZER_URL_VAR: &str = "CONCERN_CATEGORIZER_URL";
pub const CATEGORIZER_MODEL_VAR: &str = "CONCERN_CATEGORIZER_MODEL";
pub const TOXICITY_URL_VAR: &str = "CONCERN_TOXICITY_URL";

const TIMEOUT: Duration = Duration::from_secs(60);
const PARALLELISM: usize = 4;

fn env(name: &str) -> Result<String> {
    std::env::var(name).with_context(|| format!("{name} is not set"))
}

fn client() -> Result<Client> {
    Client::builder().timeout(TIMEOUT).build().context("building HTTP client")
}

fn send(req: RequestBuilder) -> Result<Value, ClientError> {
    let resp: Response = req.send().map_err(|e| {
        if e.is_timeout() {
            ClientError::Timeout
        } else {
            ClientError::Transport(e.to_string())
        }
    })?;
    let status = resp.status();
    if status.is_server_error() || status.as_u16() == 429 {
        return Err(ClientError::Transport(format!("HTTP {status}")));
    }
    if !status.is_success() {
        return Err(ClientError::Protocol(format!("HTTP {status}")));
    }
    resp.json().map_err(|e| ClientError::Protocol(format!("bad JSON body: {e}")))
}

/// Posts `{"text": ...}` and expects `{"is_concern": bool, "confidence": f64}`.
pub struct HttpDetector {
    id: String,
    url: String,
    key: Option<String>,
    http: Client,
}

impl HttpDetector {
    pub fn from_env() -> Result<Self> {
        let url = env(DETECTOR_URL_VAR)?;
        Ok(HttpDetector {
            id: format!("http-detector:{url}"),
            url,
            key: std::env::var(API_KEY_VAR).ok(),
            http: client()?,
        })
    }
}

#[derive(Deserialize)]
struct DetectReply {
    is_concern: bool,
    confidence: f64,
}

impl DetectorClient for HttpDetector {
    fn id(&self) -> &str {
        &self.id
    }

    fn detect(&self, text: &str) -> Result<RawDetection, ClientError> {
        let mut req = self.http.post(&self.url).json(&json!({ "text": text }));
        if let Some(k) = &self.key {
            req = req.bearer_auth(k);
        }
        let v = send(req)?;
        let r: DetectReply = serde_json::from_value(v).map_err(|e| ClientError::Protocol(e.to_string()))?;
        Ok(RawDetection {
            is_concern: r.is_concern,
            confidence: r.confidence,
        })
    }

    fn max_parallelism(&self) -> Option<usize> {
        Some(PARALLELISM)
    }
}

/// Chat-completions style endpoint; the reply text is the category name.
pub struct HttpCategorizer {
    id: String,
    url: String,
    model: String,
    key: String,
    http: Client,
}

impl HttpCategorizer {
    pub fn from_env() -> Result<Self> {
        let url = env(CATEGORIZER_URL_VAR)?;
        let model = env(CATEGORIZER_MODEL_VAR)?;
        Ok(HttpCategorizer {
            id: format!("http-categorizer:{model}@{url}"),
            url,
            model,
            key: env(API_KEY_VAR)?,
            http: client()?,
        })
    }
}

impl CategorizerClient for HttpCategorizer {
    fn id(&self) -> &str {
        &self.id
    }

    fn categorize(&self, prompt: &PromptText) -> Result<String, ClientError> {
        let body = json!({
            "model": self.model,
            "temperature": 0,
            "messages": [{ "role": "user", "content": prompt.render() }],
        });
        let v = send(self.http.post(&self.url).bearer_auth(&self.key).json(&body))?;
        v.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(|s| s.trim().to_string())
            .ok_or_else(|| ClientError::Protocol("reply has no message content".into()))
    }

    fn max_parallelism(&self) -> Option<usize> {
        Some(PARALLELISM)
    }
}

const ATTRIBUTES: [&str; 6] = ["TOXICITY", "SEVERE_TOXICITY", "INSULT", "PROFANITY", "THREAT", "IDENTITY_ATTACK"];

/// Comment-analysis style endpoint returning per-attribute summary scores.
pub struct HttpToxicity {
    id: String,
    url: String,
    key: String,
    http: Client,
}

impl HttpToxicity {
    pub fn from_env() -> Result<Self> {
        let url = env(TOXICITY_URL_VAR)?;
        Ok(HttpToxicity {
            id: format!("http-toxicity:{url}"),
            url,
            key: env(API_KEY_VAR)?,
            http: client()?,
        })
    }
}

impl ToxicityProvider for HttpToxicity {
    fn id(&self) -> &str {
        &self.id
    }

    fn score(&self, text: &str) -> Result<ToxicityAttributes, ClientError> {
        let requested: serde_json::Map<String, Value> = ATTRIBUTES.iter().map(|a| (a.to_string(), json!({}))).collect();
        let body = json!({
            "comment": { "text": text },
            "languages": ["en"],
            "requestedAttributes": requested,
        });
        let url = reqwest::Url::parse_with_params(&self.url, [("key", &self.key)])
            .map_err(|e| ClientError::Protocol(format!("bad endpoint URL: {e}")))?;
        let v = send(self.http.post(url).json(&body))?;
        let mut out = [0.0; 6];
        for (slot, name) in out.iter_mut().zip(ATTRIBUTES) {
            *slot = v
                .pointer(&format!("/attributeScores/{name}/summaryScore/value"))
                .and_then(Value::as_f64)
                .ok_or_else(|| ClientError::Protocol(format!("reply lacks {name}")))?;
        }
        Ok(ToxicityAttributes::from_array(out))
    }

    fn max_parallelism(&self) -> Option<usize> {
        Some(PARALLELISM)
    }
}
