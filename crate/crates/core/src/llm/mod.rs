//! Completion backends, response parsing and the on-disk response cache.

mod cache;
mod mock;
mod parse;
mod remote;

pub use cache::{cache_key, CacheEntry, Lookup, ResponseCache};
pub use mock::{prompt_hash, MockBackend};
pub use parse::{
    last_json_object, parse_allocation_response, parse_postfilter_response, AllocationFindings, NoJsonObject,
    PostFilterVerdict, Verdict,
};
pub use remote::{RemoteBackend, RemoteOptions, DEFAULT_API_KEY_ENV};

use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Condvar, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use crate::prompts::PromptText;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationConfig {
    pub model_name: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub endpoint: Option<String>,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            model_name: "mock".into(),
            temperature: 0.0,
            max_output_tokens: 1024,
            endpoint: None,
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<(), LlmError> {
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(LlmError::Config(format!(
                "temperature {} must be >= 0",
                self.temperature
            )));
        }
        if self.max_output_tokens == 0 {
            return Err(LlmError::Config("max_output_tokens must be positive".into()));
        }
        if self.model_name.trim().is_empty() {
            return Err(LlmError::Config("model_name must be non-empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawCompletion {
    pub text: String,
    pub backend_id: String,
    pub cached: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum LlmError {
    #[error("environment variable {var} is not set; it must hold the API key")]
    MissingCredential { var: String },
    #[error("backend configuration: {0}")]
    Config(String),
    #[error("request failed after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    #[error("backend answered HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("unexpected backend response: {0}")]
    Protocol(String),
    #[error("mock fixtures: {0}")]
    Fixture(String),
    #[error("no mock fixture for the {kind} prompt of {function}")]
    NoFixture { function: String, kind: &'static str },
}

impl LlmError {
    /// Errors that make every further request pointless.
    pub fn is_fatal(&self) -> bool {
        !matches!(self, LlmError::NoFixture { .. })
    }
}

pub trait CompletionBackend: Send + Sync {
    fn id(&self) -> String;
    fn complete(&self, prompt: &PromptText, config: &GenerationConfig) -> Result<String, LlmError>;
}

/// Counting semaphore bounding concurrent backend requests.
#[derive(Debug)]
struct Semaphore {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Semaphore);

impl Semaphore {
    fn new(n: usize) -> Self {
        Semaphore {
            free: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

/// A backend plus cache and in-flight limit. Shared by reference between
/// worker threads.
pub struct LlmClient {
    backend: Arc<dyn CompletionBackend>,
    cache: Option<ResponseCache>,
    limiter: Semaphore,
    calls: AtomicUsize,
    hits: AtomicUsize,
}

pub const DEFAULT_MAX_IN_FLIGHT: usize = 4;

impl LlmClient {
    pub fn new(backend: Arc<dyn CompletionBackend>) -> Self {
        LlmClient {
            backend,
            cache: None,
            limiter: Semaphore::new(DEFAULT_MAX_IN_FLIGHT),
            calls: AtomicUsize::new(0),
            hits: AtomicUsize::new(0),
        }
    }

    pub fn with_cache(mut self, cache: ResponseCache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn with_max_in_flight(mut self, n: usize) -> Self {
        self.limiter = Semaphore::new(n);
        self
    }

    pub fn backend_id(&self) -> String {
        self.backend.id()
    }

    /// Requests that reached the backend.
    pub fn backend_calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn cache_hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }

    pub fn complete(&self, prompt: &PromptText, config: &GenerationConfig) -> Result<RawCompletion, LlmError> {
        let key = cache_key(prompt.kind, &prompt.text, &config.model_name, config.temperature);
        if let Some(cache) = &self.cache {
            match cache.get(&key) {
                Lookup::Hit(e) => {
                    self.hits.fetch_add(1, Ordering::SeqCst);
                    return Ok(RawCompletion {
                        text: e.text,
                        backend_id: self.backend.id(),
                        cached: true,
                    });
                }
                Lookup::Corrupt(why) => log::warn!("ignoring cache entry {why}"),
                Lookup::Miss => {}
            }
        }
        let text = {
            let _permit = self.limiter.acquire();
            self.calls.fetch_add(1, Ordering::SeqCst);
            self.backend.complete(prompt, config)?
        };
        if let Some(cache) = &self.cache {
            let entry = CacheEntry {
                prompt_hash: key,
                model: config.model_name.clone(),
                text: text.clone(),
                timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            };
            if let Err(e) = cache.put(&entry) {
                log::warn!("cannot write cache entry under {}: {e}", cache.dir().display());
            }
        }
        Ok(RawCompletion {
            text,
            backend_id: self.backend.id(),
            cached: false,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::FunctionId;
    use crate::prompts::PromptKind;

    fn prompt(text: &str) -> PromptText {
        PromptText {
            text: text.into(),
            kind: PromptKind::Initial,
            function_id: FunctionId("a.c:f:1".into()),
            function_name: "f".into(),
        }
    }

    #[test]
    fn second_identical_request_is_a_cache_hit() {
        let dir = tempfile::tempdir().unwrap();
        let mock = MockBackend::from_json(r#"{"f": "answer"}"#).unwrap();
        let client = LlmClient::new(Arc::new(mock)).with_cache(ResponseCache::new(dir.path()));
        let cfg = GenerationConfig::default();
        let a = client.complete(&prompt("p"), &cfg).unwrap();
        let b = client.complete(&prompt("p"), &cfg).unwrap();
        assert!(!a.cached && b.cached);
        assert_eq!(a.text, b.text);
        assert_eq!(client.backend_calls(), 1);
    }

    #[test]
    fn corrupt_entry_is_bypassed_and_rewritten() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = GenerationConfig::default();
        let key = cache_key(PromptKind::Initial, "p", &cfg.model_name, cfg.temperature);
        std::fs::create_dir_all(dir.path().join(&key[..2])).unwrap();
        std::fs::write(dir.path().join(&key[..2]).join(format!("{key}.json")), "garbage").unwrap();
        let mock = MockBackend::from_json(r#"{"f": "answer"}"#).unwrap();
        let client = LlmClient::new(Arc::new(mock)).with_cache(ResponseCache::new(dir.path()));
        let a = client.complete(&prompt("p"), &cfg).unwrap();
        assert!(!a.cached);
        assert!(client.complete(&prompt("p"), &cfg).unwrap().cached);
    }

    #[test]
    fn in_flight_limit_is_respected() {
        use std::sync::atomic::AtomicUsize;
        struct Slow {
            now: AtomicUsize,
            peak: AtomicUsize,
        }
        impl CompletionBackend for Slow {
            fn id(&self) -> String {
                "slow".into()
            }
            fn complete(&self, _: &PromptText, _: &GenerationConfig) -> Result<String, LlmError> {
                let n = self.now.fetch_add(1, Ordering::SeqCst) + 1;
                self.peak.fetch_max(n, Ordering::SeqCst);
                std::thread::sleep(std::time::Duration::from_millis(20));
                self.now.fetch_sub(1, Ordering::SeqCst);
                Ok("{}".into())
            }
        }
        let backend = Arc::new(Slow {
            now: AtomicUsize::new(0),
            peak: AtomicUsize::new(0),
        });
        let client = LlmClient::new(backend.clone()).with_max_in_flight(2);
        let cfg = GenerationConfig::default();
        std::thread::scope(|s| {
            for i in 0..8 {
                let (client, cfg) = (&client, &cfg);
                s.spawn(move || client.complete(&prompt(&i.to_string()), cfg).unwrap());
            }
        });
        assert!(backend.peak.load(Ordering::SeqCst) <= 2);
        assert_eq!(client.backend_calls(), 8);
    }

    #[test]
    fn config_validation() {
        let mut c = GenerationConfig::default();
        assert!(c.validate().is_ok());
        c.temperature = -1.0;
        assert!(c.validate().is_err());
    }
}
