use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use super::{BackendError, ModelBackend, ModelRequest, RawReply, Speaker, Usage};

fn default_timeout() -> f64 {
    120.0
}
fn default_retries() -> u32 {
    3
}
fn default_backoff() -> u64 {
    500
}

/// OpenAI-compatible chat-completions endpoint. The credential is read from
/// the environment variable named by `auth_env`, never stored in config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HttpConfig {
    pub endpoint_url: String,
    pub model_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auth_env: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: f64,
    /// Retries after a 429 or 5xx reply.
    #[serde(default = "default_retries")]
    pub max_retries: u32,
    /// Base delay; doubles per retry.
    #[serde(default = "default_backoff")]
    pub backoff_ms: u64,
    /// Minimum spacing between requests from this backend.
    #[serde(default)]
    pub min_interval_ms: u64,
}

impl HttpConfig {
    pub fn new(endpoint_url: &str, model_name: &str) -> HttpConfig {
        HttpConfig {
            endpoint_url: endpoint_url.to_string(),
            model_name: model_name.to_string(),
            auth_env: None,
            timeout_secs: default_timeout(),
            max_retries: default_retries(),
            backoff_ms: default_backoff(),
            min_interval_ms: 0,
        }
    }
}

pub struct HttpBackend {
    config: HttpConfig,
    client: reqwest::blocking::Client,
    last_request: Mutex<Option<Instant>>,
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Result<HttpBackend, BackendError> {
        if !(config.timeout_secs > 0.0) {
            return Err(BackendError::InvalidRequest("timeout_secs must be positive".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(config.timeout_secs))
            .build()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        Ok(HttpBackend { config, client, last_request: Mutex::new(None) })
    }

    fn credential(&self) -> Result<Option<String>, BackendError> {
        match &self.config.auth_env {
            None => Ok(None),
            Some(var) => match std::env::var(var) {
                Ok(v) if !v.is_empty() => Ok(Some(v)),
                _ => Err(BackendError::AuthFailure(format!("environment variable {var} is not set"))),
            },
        }
    }

    fn throttle(&self) {
        if self.config.min_interval_ms == 0 {
            return;
        }
        let gap = Duration::from_millis(self.config.min_interval_ms);
        let mut last = self.last_request.lock().unwrap_or_else(|p| p.into_inner());
        if let Some(t) = *last {
            let elapsed = t.elapsed();
            if elapsed < gap {
                std::thread::sleep(gap - elapsed);
            }
        }
        *last = Some(Instant::now());
    }

    fn body(&self, req: &ModelRequest) -> Value {
        let messages: Vec<Value> = req
            .messages
            .iter()
            .map(|m| {
                let role = match m.speaker {
                    Speaker::System => "system",
                    Speaker::User => "user",
                    Speaker::Assistant => "assistant",
                };
                json!({"role": role, "content": m.text})
            })
            .collect();
        let mut body = json!({
            "model": self.config.model_name,
            "messages": messages,
            "temperature": req.decode_params.temperature,
            "max_tokens": req.decode_params.max_tokens,
        });
        if let Some(seed) = req.decode_params.seed {
            body["seed"] = json!(seed);
        }
        body
    }
}

fn map_reqwest(e: reqwest::Error) -> BackendError {
    if e.is_timeout() {
        BackendError::Timeout
    } else {
        BackendError::Transport(e.to_string())
    }
}

fn decode_completion(text: &str) -> Result<(String, Usage), BackendError> {
    let v: Value = serde_json::from_str(text).map_err(|e| BackendError::Transport(format!("bad response body: {e}")))?;
    let content = v["choices"][0]["message"]["content"]
        .as_str()
        .ok_or_else(|| BackendError::Transport("response has no choices[0].message.content".into()))?;
    let usage = Usage {
        prompt_tokens: v["usage"]["prompt_tokens"].as_u64().unwrap_or(0),
        completion_tokens: v["usage"]["completion_tokens"].as_u64().unwrap_or(0),
    };
    Ok((content.to_string(), usage))
}

impl ModelBackend for HttpBackend {
    fn id(&self) -> String {
        format!("http:{}", self.config.model_name)
    }

    fn send(&self, req: &ModelRequest, _attempt: u32) -> Result<RawReply, BackendError> {
        let key = self.credential()?;
        let body = self.body(req);
        let mut tries = 0u32;
        loop {
            tries += 1;
            self.throttle();
            let mut builder = self.client.post(&self.config.endpoint_url).json(&body);
            if let Some(k) = &key {
                builder = builder.bearer_auth(k);
            }
            let resp = builder.send().map_err(map_reqwest)?;
            let status = resp.status();
            let retry_after = resp
                .headers()
                .get("retry-after")
                .and_then(|h| h.to_str().ok())
                .and_then(|s| s.trim().parse::<u64>().ok());
            let text = resp.text().map_err(map_reqwest)?;
            let code = status.as_u16();
            if code == 429 || status.is_server_error() {
                if tries <= self.config.max_retries {
                    let backoff = self.config.backoff_ms.saturating_mul(1 << (tries - 1).min(16));
                    let wait = retry_after.map(|s| s * 1000).unwrap_or(backoff).min(60_000);
                    std::thread::sleep(Duration::from_millis(wait));
                    continue;
                }
                return Err(if code == 429 {
                    BackendError::RateLimited { attempts: tries }
                } else {
                    BackendError::Transport(format!("HTTP {code}: {text}"))
                });
            }
            if code == 401 || code == 403 {
                return Err(BackendError::AuthFailure(format!("HTTP {code}")));
            }
            if !status.is_success() {
                return Err(BackendError::Transport(format!("HTTP {code}: {text}")));
            }
            let (content, usage) = decode_completion(&text)?;
            return Ok(RawReply { text: content, usage, attempts: tries });
        }
    }
}
