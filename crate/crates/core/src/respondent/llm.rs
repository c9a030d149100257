use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{parse_answer, render_prompt, Query, Respondent, RespondentError, Response};

/// Connection settings for a chat-completion endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmConfig {
    /// Full URL of the chat-completions route.
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the API key, if any.
    pub api_key_env: Option<String>,
    pub temperature: f64,
    /// Total number of times a prompt is sent before giving up on malformed replies.
    pub max_retries: u32,
    pub timeout: Duration,
    /// Upper bound on requests in flight across all clones of the client.
    pub max_concurrency: usize,
}

impl LlmConfig {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            model: model.into(),
            api_key_env: None,
            temperature: 1.0,
            max_retries: 3,
            timeout: Duration::from_secs(60),
            max_concurrency: 4,
        }
    }
}

#[derive(Debug)]
struct Limiter {
    in_flight: Mutex<usize>,
    freed: Condvar,
    limit: usize,
}

impl Limiter {
    fn acquire(&self) -> Permit<'_> {
        let mut n = self.in_flight.lock().unwrap_or_else(|e| e.into_inner());
        while *n >= self.limit {
            n = self.freed.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n += 1;
        Permit(self)
    }
}

struct Permit<'a>(&'a Limiter);

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        let mut n = self.0.in_flight.lock().unwrap_or_else(|e| e.into_inner());
        *n -= 1;
        self.0.freed.notify_one();
    }
}

/// Stateless chat-completion client. Every query is a fresh single-message
/// conversation; clones share the concurrency limit.
#[derive(Clone)]
pub struct LlmClient {
    config: LlmConfig,
    agent: ureq::Agent,
    api_key: Option<String>,
    limiter: Arc<Limiter>,
}

impl std::fmt::Debug for LlmClient {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LlmClient")
            .field("config", &self.config)
            .field("api_key", &self.api_key.as_ref().map(|_| "<redacted>"))
            .finish()
    }
}

impl LlmClient {
    pub fn new(config: LlmConfig) -> Self {
        let api_key = config.api_key_env.as_deref().and_then(|name| std::env::var(name).ok());
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let limiter = Arc::new(Limiter {
            in_flight: Mutex::new(0),
            freed: Condvar::new(),
            limit: config.max_concurrency.max(1),
        });
        Self { config, agent, api_key, limiter }
    }

    pub fn config(&self) -> &LlmConfig {
        &self.config
    }

    /// Sends one prompt and returns the first choice's message content.
    pub fn complete(&self, prompt: &str) -> Result<String, RespondentError> {
        let body = json!({
            "model": self.config.model,
            "temperature": self.config.temperature,
            "messages": [{ "role": "user", "content": prompt }],
        });
        let _permit = self.limiter.acquire();
        let mut request = self.agent.post(&self.config.endpoint);
        if let Some(key) = &self.api_key {
            request = request.header("Authorization", &format!("Bearer {key}"));
        }
        let transport = |e: ureq::Error| RespondentError::TransportError(e.to_string());
        let mut response = request.send_json(&body).map_err(transport)?;
        let status = response.status();
        let text = response.body_mut().read_to_string().map_err(transport)?;
        if !status.is_success() {
            return Err(RespondentError::TransportError(format!("HTTP {status}: {text}")));
        }
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| RespondentError::TransportError(format!("invalid JSON reply: {e}")))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_owned)
            .ok_or_else(|| RespondentError::TransportError("reply has no choices[0].message.content".into()))
    }
}

impl Respondent for LlmClient {
    /// Re-sends the identical prompt while replies fail to parse.
    fn answer(&mut self, query: &Query) -> Result<Response, RespondentError> {
        let prompt = render_prompt(query);
        let attempts = self.config.max_retries.max(1);
        let mut last_raw = String::new();
        for _ in 0..attempts {
            let raw = self.complete(&prompt)?;
            match parse_answer(query, &raw) {
                Ok(answer) => return Ok(Response { answer, raw }),
                Err(RespondentError::MalformedAnswer { .. }) => last_raw = raw,
                Err(e) => return Err(e),
            }
        }
        Err(RespondentError::RespondentFailure { attempts, last_raw })
    }

    fn wall_clock(&self) -> bool {
        true
    }
}
