use std::sync::atomic::{AtomicUsize, Ordering};
use std::thread;
use std::time::Duration;

use serde_json::{json, Value as Json};

use super::{CompletionParams, LlmError, LlmProvider, LlmRequest};

#[derive(Debug, Clone)]
pub struct HttpConfig {
    /// Base URL; requests go to `<base>/chat/completions`.
    pub base_url: String,
    /// Credential, normally read from an environment variable.
    pub api_key: Option<String>,
    pub max_attempts: usize,
    pub backoff_base: Duration,
    pub timeout: Duration,
    /// Log request and response bodies (credential redacted).
    pub debug: bool,
}

impl HttpConfig {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            api_key: None,
            max_attempts: 5,
            backoff_base: Duration::from_secs(1),
            timeout: Duration::from_secs(120),
            debug: false,
        }
    }

    /// Reads the credential from `var` when it is set.
    pub fn with_key_from_env(mut self, var: &str) -> Self {
        self.api_key = std::env::var(var).ok().filter(|k| !k.is_empty());
        self
    }
}

/// Chat-completions client with exponential backoff on transport errors,
/// rate limits, and server errors.
pub struct HttpProvider {
    config: HttpConfig,
    client: reqwest::blocking::Client,
    attempts: AtomicUsize,
}

fn retryable(status: u16) -> bool {
    status == 429 || (500..600).contains(&status)
}

impl HttpProvider {
    pub fn new(config: HttpConfig) -> Result<Self, LlmError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| LlmError::Config(e.to_string()))?;
        Ok(Self {
            config,
            client,
            attempts: AtomicUsize::new(0),
        })
    }

    /// HTTP requests sent so far, including retries.
    pub fn attempts(&self) -> usize {
        self.attempts.load(Ordering::SeqCst)
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'))
    }

    fn redact(&self, text: &str) -> String {
        match &self.config.api_key {
            Some(k) if !k.is_empty() => text.replace(k.as_str(), "[REDACTED]"),
            _ => text.to_string(),
        }
    }

    pub fn request_body(request: &LlmRequest, params: &CompletionParams) -> Json {
        json!({
            "model": params.model,
            "messages": [
                {"role": "system", "content": request.prompt.preamble},
                {"role": "user", "content": request.prompt.text()},
            ],
            "temperature": params.temperature,
            "max_tokens": params.max_tokens,
            "stop": params.stops(),
        })
    }

    fn send_once(&self, body: &Json) -> Result<String, (LlmError, bool)> {
        self.attempts.fetch_add(1, Ordering::SeqCst);
        let mut req = self.client.post(self.endpoint()).json(body);
        if let Some(key) = &self.config.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req
            .send()
            .map_err(|e| (LlmError::Transport(self.redact(&e.to_string())), true))?;
        let status = resp.status().as_u16();
        let text = resp
            .text()
            .map_err(|e| (LlmError::Transport(self.redact(&e.to_string())), true))?;
        if self.config.debug {
            log::debug!("response {status}: {}", self.redact(&text));
        }
        if !(200..300).contains(&status) {
            return Err((
                LlmError::Status {
                    status,
                    body: self.redact(&text),
                },
                retryable(status),
            ));
        }
        let parsed: Json =
            serde_json::from_str(&text).map_err(|e| (LlmError::Response(e.to_string()), false))?;
        parsed["choices"][0]["message"]["content"]
            .as_str()
            .or_else(|| parsed["choices"][0]["text"].as_str())
            .map(str::to_string)
            .ok_or_else(|| (LlmError::Response("no choices[0] content".into()), false))
    }
}

impl LlmProvider for HttpProvider {
    fn complete(&self, request: &LlmRequest, params: &CompletionParams) -> Result<String, LlmError> {
        let body = Self::request_body(request, params);
        if self.config.debug {
            log::debug!("request to {}: {}", self.endpoint(), self.redact(&body.to_string()));
        }
        let mut delay = self.config.backoff_base;
        let mut attempt = 1;
        loop {
            match self.send_once(&body) {
                Ok(text) => return Ok(text),
                Err((err, retry)) => {
                    if !retry || attempt >= self.config.max_attempts {
                        return Err(err);
                    }
                    log::warn!("LLM request failed (attempt {attempt}): {err}; retrying in {delay:?}");
                    thread::sleep(delay);
                    delay *= 2;
                    attempt += 1;
                }
            }
        }
    }
}
