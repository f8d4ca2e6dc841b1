//! Run configuration file.
//!
//! TOML with the sections `[corpus]`, `[backend]`, `[annotate]`, `[cache]`
//! and `[output]`. Relative paths resolve against the file's directory.
//! Credentials are never read from here.

use serde::Deserialize;
use std::path::{Path, PathBuf};

use crate::annotate::{AnnotateConfig, Qualifiers, DEFAULT_CONTEXT_DEPTH};
use crate::llm::{GenerationConfig, RemoteOptions, DEFAULT_MAX_IN_FLIGHT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    #[default]
    Mock,
    Remote,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSection {
    pub root: Option<PathBuf>,
    pub include: Vec<String>,
    pub exclude: Vec<String>,
    /// Macros taken as undefined when resolving `#ifdef` branches.
    pub assume_undefined: Vec<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendSection {
    pub kind: BackendKind,
    /// Mock fixture file.
    pub fixtures: Option<PathBuf>,
    pub model_name: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub endpoint: Option<String>,
    pub api_key_env: String,
    pub max_retries: u32,
    pub retry_backoff_ms: u64,
    pub timeout_secs: u64,
    pub max_in_flight: usize,
}

impl Default for BackendSection {
    fn default() -> Self {
        let g = GenerationConfig::default();
        let r = RemoteOptions::default();
        BackendSection {
            kind: BackendKind::Mock,
            fixtures: None,
            model_name: g.model_name,
            temperature: g.temperature,
            max_output_tokens: g.max_output_tokens,
            endpoint: None,
            api_key_env: r.api_key_env,
            max_retries: r.max_retries,
            retry_backoff_ms: r.retry_backoff_ms,
            timeout_secs: r.timeout_secs,
            max_in_flight: DEFAULT_MAX_IN_FLIGHT,
        }
    }
}

impl BackendSection {
    pub fn generation(&self) -> GenerationConfig {
        GenerationConfig {
            model_name: self.model_name.clone(),
            temperature: self.temperature,
            max_output_tokens: self.max_output_tokens,
            endpoint: self.endpoint.clone(),
        }
    }

    pub fn remote_options(&self) -> RemoteOptions {
        RemoteOptions {
            api_key_env: self.api_key_env.clone(),
            max_retries: self.max_retries,
            retry_backoff_ms: self.retry_backoff_ms,
            timeout_secs: self.timeout_secs,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnotateSection {
    pub context_depth: usize,
    pub post_filter: bool,
    pub postfilter_context_depth: usize,
    pub alloc_qualifier: u32,
    pub free_qualifier: u32,
    pub prompts_dir: Option<PathBuf>,
}

impl Default for AnnotateSection {
    fn default() -> Self {
        let q = Qualifiers::default();
        AnnotateSection {
            context_depth: DEFAULT_CONTEXT_DEPTH,
            post_filter: true,
            postfilter_context_depth: DEFAULT_CONTEXT_DEPTH,
            alloc_qualifier: q.alloc,
            free_qualifier: q.free,
            prompts_dir: None,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CacheSection {
    /// No directory means no cache.
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub annotations: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: CorpusSection,
    pub backend: BackendSection,
    pub annotate: AnnotateSection,
    pub cache: CacheSection,
    pub output: OutputSection,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {message}")]
    Io { path: String, message: String },
    #[error("config {path}: {message}")]
    Invalid { path: String, message: String },
}

const SECRET_KEYS: [&str; 4] = ["api_key", "token", "password", "secret"];

fn resolve(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(v) = p {
        if v.is_relative() {
            *v = base.join(&*v);
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let invalid = |message: String| ConfigError::Invalid {
            path: origin.to_string(),
            message,
        };
        let raw: toml::Value = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
        if let Some(b) = raw.get("backend").and_then(|b| b.as_table()) {
            if let Some(k) = b.keys().find(|k| SECRET_KEYS.contains(&k.as_str())) {
                return Err(invalid(format!(
                    "backend.{k}: secrets are not accepted in the config file; set the variable named by backend.api_key_env"
                )));
            }
        }
        let cfg: RunConfig = raw.try_into().map_err(|e: toml::de::Error| invalid(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let mut cfg = Self::from_toml(&text, &path.display().to_string())?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        resolve(&base, &mut cfg.corpus.root);
        resolve(&base, &mut cfg.backend.fixtures);
        resolve(&base, &mut cfg.annotate.prompts_dir);
        resolve(&base, &mut cfg.cache.dir);
        resolve(&base, &mut cfg.output.dir);
        resolve(&base, &mut cfg.output.annotations);
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        self.backend.generation().validate().map_err(|e| e.to_string())?;
        if self.annotate.alloc_qualifier == 0 || self.annotate.free_qualifier == 0 {
            return Err("qualifiers must be >= 1".into());
        }
        if self.backend.max_in_flight == 0 {
            return Err("backend.max_in_flight must be >= 1".into());
        }
        match self.backend.kind {
            BackendKind::Mock if self.backend.fixtures.is_none() => {
                Err("the mock backend needs a fixture file (backend.fixtures or --fixtures)".into())
            }
            BackendKind::Remote if self.backend.endpoint.as_deref().is_none_or(|e| e.trim().is_empty()) => {
                Err("the remote backend needs an endpoint (backend.endpoint or --endpoint)".into())
            }
            _ => Ok(()),
        }
    }

    pub fn annotate_config(&self) -> AnnotateConfig {
        AnnotateConfig {
            generation: self.backend.generation(),
            context_depth: self.annotate.context_depth,
            post_filter: self.annotate.post_filter,
            postfilter_context_depth: self.annotate.postfilter_context_depth,
            qualifiers: Qualifiers {
                alloc: self.annotate.alloc_qualifier,
                free: self.annotate.free_qualifier,
            },
            prompts: Default::default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_file() {
        let c = RunConfig::from_toml(
            r#"
            [corpus]
            root = "src"
            exclude = ["test/**"]
            [backend]
            kind = "remote"
            endpoint = "http://localhost:8000/v1"
            model_name = "codestral"
            [annotate]
            context_depth = 0
            post_filter = false
            [cache]
            dir = "cache"
            "#,
            "t",
        )
        .unwrap();
        assert_eq!(c.backend.kind, BackendKind::Remote);
        assert_eq!(c.annotate.context_depth, 0);
        assert!(!c.annotate.post_filter);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn defaults_and_rejections() {
        let c = RunConfig::from_toml("", "t").unwrap();
        assert_eq!(c.annotate.context_depth, 1);
        assert!(c.annotate.post_filter);
        assert!(c.validate().is_err(), "mock without fixtures");
        assert!(RunConfig::from_toml("[backend]\napi_key = \"x\"\n", "t")
            .unwrap_err()
            .to_string()
            .contains("secrets"));
        assert!(RunConfig::from_toml("[backend]\nkind = \"both\"\n", "t").is_err());
        assert!(RunConfig::from_toml("[nonsense]\n", "t").is_err());
    }
}
