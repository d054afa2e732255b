//! Blocking client for OpenAI-compatible chat completion endpoints.

use std::sync::atomic::{AtomicU64, Ordering};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{BackendConfig, ClassifyError};

static REQUESTS_ISSUED: AtomicU64 = AtomicU64::new(0);

/// Number of HTTP requests attempted by this process. Offline backends
/// never move this counter.
pub fn requests_issued() -> u64 {
    REQUESTS_ISSUED.load(Ordering::SeqCst)
}

#[derive(Debug, Serialize)]
pub struct ChatMessage<'a> {
    pub role: &'a str,
    pub content: &'a str,
}

#[derive(Debug, Serialize)]
pub struct ChatRequest<'a> {
    pub model: &'a str,
    pub temperature: f64,
    pub messages: Vec<ChatMessage<'a>>,
}

#[derive(Debug, Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Debug, Deserialize)]
struct Choice {
    message: ReplyMessage,
}

#[derive(Debug, Deserialize)]
struct ReplyMessage {
    content: Option<String>,
}

/// Pulls `choices[0].message.content` out of a completion response.
pub fn parse_reply(body: &str) -> Result<String, ClassifyError> {
    let parsed: ChatResponse =
        serde_json::from_str(body).map_err(|e| ClassifyError::MalformedReply(e.to_string()))?;
    parsed
        .choices
        .into_iter()
        .next()
        .and_then(|c| c.message.content)
        .ok_or_else(|| ClassifyError::MalformedReply("no choices[0].message.content".into()))
}

enum Attempt {
    Done(String),
    Retry(String),
    Fatal(ClassifyError),
}

pub struct RemoteClient {
    agent: ureq::Agent,
    url: String,
    model: String,
    temperature: f64,
    retry_limit: u32,
    backoff_base: Duration,
    credential_env: String,
}

impl RemoteClient {
    pub fn new(config: &BackendConfig) -> Self {
        let agent_config = ureq::Agent::config_builder()
            .timeout_global(Some(config.request_timeout))
            .http_status_as_error(false)
            .build();
        RemoteClient {
            agent: ureq::Agent::new_with_config(agent_config),
            url: format!("{}/v1/chat/completions", config.endpoint.trim_end_matches('/')),
            model: config.model.clone(),
            temperature: config.temperature,
            retry_limit: config.retry_limit,
            backoff_base: config.backoff_base,
            credential_env: config.credential_env.clone(),
        }
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    fn credential(&self) -> Result<String, ClassifyError> {
        match std::env::var(&self.credential_env) {
            Ok(key) if !key.trim().is_empty() => Ok(key.trim().to_string()),
            _ => Err(ClassifyError::InvalidCredential(format!(
                "environment variable {} is not set",
                self.credential_env
            ))),
        }
    }

    fn attempt(&self, key: &str, payload: &[u8]) -> Attempt {
        REQUESTS_ISSUED.fetch_add(1, Ordering::SeqCst);
        let response = self
            .agent
            .post(&self.url)
            .header("Authorization", &format!("Bearer {key}"))
            .header("Content-Type", "application/json")
            .send(payload);
        let mut response = match response {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(format!("transport error: {e}")),
        };
        let status = response.status().as_u16();
        let body = match response.body_mut().read_to_string() {
            Ok(b) => b,
            Err(e) => return Attempt::Retry(format!("reading response body: {e}")),
        };
        match status {
            200..=299 => match parse_reply(&body) {
                Ok(reply) => Attempt::Done(reply),
                Err(e) => Attempt::Fatal(e),
            },
            401 | 403 => Attempt::Fatal(ClassifyError::InvalidCredential(format!(
                "endpoint answered HTTP {status}"
            ))),
            408 | 429 | 500..=599 => Attempt::Retry(format!("HTTP {status}")),
            _ => Attempt::Fatal(ClassifyError::BackendRejected { status, body }),
        }
    }

    /// Sends `prompt` as a single user message. Transport errors, 408, 429
    /// and 5xx are retried up to `retry_limit` times, sleeping
    /// `backoff_base * 2^n` between attempts.
    pub fn complete(&self, prompt: &str) -> Result<String, ClassifyError> {
        let key = self.credential()?;
        let request = ChatRequest {
            model: &self.model,
            temperature: self.temperature,
            messages: vec![ChatMessage {
                role: "user",
                content: prompt,
            }],
        };
        let payload = serde_json::to_vec(&request).expect("request serializes");
        let mut last_error = String::new();
        for attempt in 0..=self.retry_limit {
            if attempt > 0 {
                thread::sleep(self.backoff_base * 2u32.saturating_pow(attempt - 1));
            }
            match self.attempt(&key, &payload) {
                Attempt::Done(reply) => return Ok(reply),
                Attempt::Fatal(e) => return Err(e),
                Attempt::Retry(reason) => last_error = reason,
            }
        }
        Err(ClassifyError::BackendUnavailable {
            attempts: self.retry_limit + 1,
            last_error,
        })
    }
}
