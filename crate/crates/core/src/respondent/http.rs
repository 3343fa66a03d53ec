//! Blocking HTTP completion client with retry, backoff and rate limiting.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::Deserialize;
use serde_json::json;

use crate::error::{Error, Result};

use super::{BackendKind, FingerprintParams, ModelConfig, Respondent};

#[derive(Debug, Deserialize)]
struct CompletionResponse {
    choices: Vec<Choice>,
}

#[derive(Debug, Deserialize)]
struct Choice {
    text: String,
}

/// Client for a generic completion endpoint.
///
/// Requests carry prompt, model/engine name, temperature and max_tokens;
/// the bearer token comes from the configured environment variable.
/// Transient failures (transport errors, 429, 5xx) retry with exponential
/// backoff up to the configured limit; the rate limit is enforced globally
/// across threads sharing the client.
pub struct HttpRespondent {
    config: ModelConfig,
    client: reqwest::blocking::Client,
    token: Option<String>,
    last_request: Mutex<Option<Instant>>,
    backoff_base: Duration,
}

impl HttpRespondent {
    pub fn new(config: ModelConfig) -> Result<HttpRespondent> {
        config.validate()?;
        if config.backend != BackendKind::Http {
            return Err(Error::Config(
                "HttpRespondent requires an http backend config".into(),
            ));
        }
        let token = match &config.credential_env {
            Some(var) => {
                Some(std::env::var(var).map_err(|_| Error::MissingCredential(var.clone()))?)
            }
            None => None,
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| Error::Backend(format!("build http client: {e}")))?;
        Ok(HttpRespondent {
            config,
            client,
            token,
            last_request: Mutex::new(None),
            backoff_base: Duration::from_millis(250),
        })
    }

    #[cfg(test)]
    pub(crate) fn with_backoff_base(mut self, base: Duration) -> Self {
        self.backoff_base = base;
        self
    }

    fn respect_rate_limit(&self) {
        let Some(rpm) = self.config.rate_limit_rpm else {
            return;
        };
        if rpm == 0 {
            return;
        }
        let interval = Duration::from_secs_f64(60.0 / rpm as f64);
        let mut last = self.last_request.lock().unwrap();
        if let Some(at) = *last {
            let elapsed = at.elapsed();
            if elapsed < interval {
                std::thread::sleep(interval - elapsed);
            }
        }
        *last = Some(Instant::now());
    }

    fn attempt(&self, prompt: &str) -> std::result::Result<String, (bool, String)> {
        let body = json!({
            "model": self.config.engine,
            "prompt": prompt,
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
        });
        let mut req = self.client.post(&self.config.target).json(&body);
        if let Some(token) = &self.token {
            req = req.bearer_auth(token);
        }
        let resp = req.send().map_err(|e| (true, format!("transport: {e}")))?;
        let status = resp.status();
        if status.as_u16() == 401 || status.as_u16() == 403 {
            return Err((false, format!("authentication failure: HTTP {status}")));
        }
        if status.as_u16() == 429 || status.is_server_error() {
            return Err((true, format!("HTTP {status}")));
        }
        if !status.is_success() {
            return Err((false, format!("HTTP {status}")));
        }
        let parsed: CompletionResponse = resp
            .json()
            .map_err(|e| (false, format!("malformed response body: {e}")))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.text)
            .ok_or((false, "response had no choices".into()))
    }
}

impl Respondent for HttpRespondent {
    fn complete(&self, prompt: &str) -> Result<String> {
        let mut last_error = String::new();
        let attempts = self.config.retry_limit + 1;
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(self.backoff_base * 2u32.pow(attempt - 1));
            }
            self.respect_rate_limit();
            match self.attempt(prompt) {
                Ok(text) => return Ok(text),
                Err((retryable, msg)) => {
                    if !retryable {
                        return Err(Error::Backend(msg));
                    }
                    last_error = msg;
                }
            }
        }
        Err(Error::RetriesExhausted {
            attempts,
            last: last_error,
        })
    }

    fn fingerprint_params(&self) -> FingerprintParams {
        self.config.fingerprint_params()
    }
}
