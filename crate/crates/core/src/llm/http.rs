use std::time::Duration;

use serde::Deserialize;
use serde_json::json;

use super::{Completion, LlmBackend, Usage};
use crate::error::LlmError;

#[derive(Debug, Clone)]
pub struct HttpBackendConfig {
    /// Full URL of a chat-completions endpoint.
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    pub api_key_env: String,
    pub timeout: Duration,
    /// Total attempts per prompt, including the first.
    pub attempts: u32,
    /// Delay before the second attempt; doubled for each later one.
    pub backoff: Duration,
}

impl Default for HttpBackendConfig {
    fn default() -> Self {
        HttpBackendConfig {
            endpoint: "http://localhost:8000/v1/chat/completions".into(),
            model: "default".into(),
            api_key_env: "CHRONOS_API_KEY".into(),
            timeout: Duration::from_secs(60),
            attempts: 3,
            backoff: Duration::from_millis(500),
        }
    }
}

/// Chat-completions client.
///
/// Request: `{"model", "temperature": 0, "messages": [{"role": "user",
/// "content": prompt}]}`. Response: `{"choices": [{"message": {"content"}}],
/// "usage": {"prompt_tokens", "completion_tokens"}}`, `usage` optional.
pub struct HttpBackend {
    config: HttpBackendConfig,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
    #[serde(default)]
    usage: Option<Usage>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    content: String,
}

enum Failure {
    /// Worth another attempt: transport errors, 429 and 5xx.
    Transient(String),
    Permanent(String),
}

impl HttpBackend {
    /// Reads the credential from the configured environment variable. A
    /// missing variable is allowed (local servers often need no key).
    pub fn new(config: HttpBackendConfig) -> Result<Self, LlmError> {
        let api_key = std::env::var(&config.api_key_env)
            .ok()
            .filter(|k| !k.is_empty());
        if api_key.is_none() {
            log::warn!("{} is not set; sending requests without a key", config.api_key_env);
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| LlmError::Backend(e.to_string()))?;
        Ok(HttpBackend {
            config,
            api_key,
            client,
        })
    }

    pub fn config(&self) -> &HttpBackendConfig {
        &self.config
    }

    fn attempt(&self, prompt: &str) -> Result<Completion, Failure> {
        let body = json!({
            "model": self.config.model,
            "temperature": 0,
            "messages": [{ "role": "user", "content": prompt }],
        });
        let mut req = self.client.post(&self.config.endpoint).json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| Failure::Transient(e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            let text = resp.text().unwrap_or_default();
            let msg = format!("HTTP {status}: {text}");
            return Err(if status.as_u16() == 429 || status.is_server_error() {
                Failure::Transient(msg)
            } else {
                Failure::Permanent(msg)
            });
        }
        let parsed: ChatResponse = resp
            .json()
            .map_err(|e| Failure::Permanent(format!("bad response body: {e}")))?;
        let choice = parsed
            .choices
            .into_iter()
            .next()
            .ok_or_else(|| Failure::Permanent("response has no choices".into()))?;
        Ok(Completion {
            text: choice.message.content,
            usage: parsed.usage,
        })
    }
}

impl LlmBackend for HttpBackend {
    fn kind(&self) -> &str {
        "http"
    }

    fn complete(&self, prompt: &str) -> Result<Completion, LlmError> {
        let attempts = self.config.attempts.max(1);
        let mut delay = self.config.backoff;
        let mut last = String::new();
        for n in 1..=attempts {
            match self.attempt(prompt) {
                Ok(c) => return Ok(c),
                Err(Failure::Permanent(m)) => return Err(LlmError::Backend(m)),
                Err(Failure::Transient(m)) => {
                    log::warn!("attempt {n}/{attempts} failed: {m}");
                    last = m;
                    if n < attempts {
                        std::thread::sleep(delay);
                        delay *= 2;
                    }
                }
            }
        }
        Err(LlmError::Backend(format!(
            "giving up after {attempts} attempts: {last}"
        )))
    }
}
