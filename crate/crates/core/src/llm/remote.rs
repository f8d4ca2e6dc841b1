use serde::{Deserialize, Serialize};
use serde_json::json;
use std::time::Duration;

use super::{CompletionBackend, GenerationConfig, LlmError};
use crate::prompts::PromptText;

pub const DEFAULT_API_KEY_ENV: &str = "MEMANNO_API_KEY";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RemoteOptions {
    /// Name of the environment variable holding the bearer token. Empty
    /// means the endpoint does not need one.
    pub api_key_env: String,
    /// Attempts after the first one.
    pub max_retries: u32,
    pub retry_backoff_ms: u64,
    pub timeout_secs: u64,
}

impl Default for RemoteOptions {
    fn default() -> Self {
        RemoteOptions {
            api_key_env: DEFAULT_API_KEY_ENV.into(),
            max_retries: 3,
            retry_backoff_ms: 500,
            timeout_secs: 120,
        }
    }
}

/// OpenAI-compatible chat completion client.
#[derive(Debug)]
pub struct RemoteBackend {
    url: String,
    token: Option<String>,
    opts: RemoteOptions,
    client: reqwest::blocking::Client,
}

fn chat_url(endpoint: &str) -> String {
    let e = endpoint.trim_end_matches('/');
    if e.ends_with("/chat/completions") {
        e.to_string()
    } else {
        format!("{e}/chat/completions")
    }
}

enum Failure {
    Retry(String),
    Fatal(LlmError),
}

impl RemoteBackend {
    /// Reads the token from the environment once, here.
    pub fn new(config: &GenerationConfig, opts: RemoteOptions) -> Result<Self, LlmError> {
        let endpoint = config
            .endpoint
            .as_deref()
            .filter(|e| !e.trim().is_empty())
            .ok_or_else(|| LlmError::Config("remote backend needs an endpoint".into()))?;
        if !(endpoint.starts_with("http://") || endpoint.starts_with("https://")) {
            return Err(LlmError::Config(format!("endpoint '{endpoint}' is not an http(s) URL")));
        }
        let token = if opts.api_key_env.is_empty() {
            None
        } else {
            match std::env::var(&opts.api_key_env) {
                Ok(t) if !t.is_empty() => Some(t),
                _ => {
                    return Err(LlmError::MissingCredential {
                        var: opts.api_key_env.clone(),
                    })
                }
            }
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(opts.timeout_secs.max(1)))
            .build()
            .map_err(|e| LlmError::Config(e.to_string()))?;
        Ok(RemoteBackend {
            url: chat_url(endpoint),
            token,
            opts,
            client,
        })
    }

    fn attempt(&self, body: &serde_json::Value) -> Result<String, Failure> {
        let mut req = self.client.post(&self.url).json(body);
        if let Some(t) = &self.token {
            req = req.bearer_auth(t);
        }
        let resp = req.send().map_err(|e| Failure::Retry(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| Failure::Retry(e.to_string()))?;
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(Failure::Retry(format!("HTTP {status}")));
        }
        if !status.is_success() {
            return Err(Failure::Fatal(LlmError::Status {
                status: status.as_u16(),
                body: text.chars().take(500).collect(),
            }));
        }
        let v: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| Failure::Fatal(LlmError::Protocol(format!("response is not JSON: {e}"))))?;
        v.pointer("/choices/0/message/content")
            .and_then(|c| c.as_str())
            .map(str::to_string)
            .ok_or_else(|| Failure::Fatal(LlmError::Protocol("response has no choices[0].message.content".into())))
    }
}

impl CompletionBackend for RemoteBackend {
    fn id(&self) -> String {
        format!("remote:{}", self.url)
    }

    fn complete(&self, prompt: &PromptText, config: &GenerationConfig) -> Result<String, LlmError> {
        let body = json!({
            "model": config.model_name,
            "temperature": config.temperature,
            "max_tokens": config.max_output_tokens,
            "messages": [{"role": "user", "content": prompt.text}],
        });
        let attempts = self.opts.max_retries + 1;
        let mut last = String::new();
        for n in 0..attempts {
            if n > 0 {
                let wait = self.opts.retry_backoff_ms.saturating_mul(1 << (n - 1).min(6));
                std::thread::sleep(Duration::from_millis(wait));
            }
            match self.attempt(&body) {
                Ok(text) => return Ok(text),
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Retry(msg)) => {
                    log::warn!("{}: attempt {} of {attempts} failed: {msg}", self.url, n + 1);
                    last = msg;
                }
            }
        }
        Err(LlmError::Transport {
            attempts,
            message: last,
        })
    }
}
