use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::path::Path;

use super::{CompletionBackend, GenerationConfig, LlmError};
use crate::prompts::{PromptKind, PromptText};

/// Hash used for fixture keys: sha256 of the prompt text, hex encoded.
pub fn prompt_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Fixture-driven backend.
///
/// Fixtures are a flat JSON object of string to completion text. A key is
/// one of: the 64-digit prompt hash; a function name (initial question);
/// `postfilter:<name>`; `*` or `postfilter:*` as the per-kind fallback.
/// Lookup tries them in that order.
#[derive(Debug, Clone, Default)]
pub struct MockBackend {
    by_hash: HashMap<String, String>,
    initial: HashMap<String, String>,
    postfilter: HashMap<String, String>,
}

impl MockBackend {
    pub fn from_map(map: HashMap<String, String>) -> Self {
        let mut m = MockBackend::default();
        for (k, v) in map {
            if k.len() == 64 && k.bytes().all(|b| b.is_ascii_hexdigit()) {
                m.by_hash.insert(k.to_ascii_lowercase(), v);
            } else if let Some(name) = k.strip_prefix("postfilter:") {
                m.postfilter.insert(name.to_string(), v);
            } else {
                m.initial.insert(k, v);
            }
        }
        m
    }

    pub fn from_json(text: &str) -> Result<Self, LlmError> {
        let map: HashMap<String, String> = serde_json::from_str(text).map_err(|e| LlmError::Fixture(e.to_string()))?;
        Ok(Self::from_map(map))
    }

    pub fn load(path: &Path) -> Result<Self, LlmError> {
        let text = std::fs::read_to_string(path).map_err(|e| LlmError::Fixture(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| LlmError::Fixture(format!("{}: {e}", path.display())))
    }

    pub fn len(&self) -> usize {
        self.by_hash.len() + self.initial.len() + self.postfilter.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl CompletionBackend for MockBackend {
    fn id(&self) -> String {
        "mock".into()
    }

    fn complete(&self, prompt: &PromptText, _config: &GenerationConfig) -> Result<String, LlmError> {
        if let Some(t) = self.by_hash.get(&prompt_hash(&prompt.text)) {
            return Ok(t.clone());
        }
        let table = match prompt.kind {
            PromptKind::Initial => &self.initial,
            PromptKind::PostFilter => &self.postfilter,
        };
        table
            .get(&prompt.function_name)
            .or_else(|| table.get("*"))
            .cloned()
            .ok_or_else(|| LlmError::NoFixture {
                function: prompt.function_name.clone(),
                kind: prompt.kind.as_str(),
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::FunctionId;

    fn prompt(kind: PromptKind, name: &str, text: &str) -> PromptText {
        PromptText {
            text: text.into(),
            kind,
            function_id: FunctionId(format!("a.c:{name}:1")),
            function_name: name.into(),
        }
    }

    #[test]
    fn lookup_order() {
        let h = prompt_hash("exact");
        let m = MockBackend::from_json(&format!(
            r#"{{"{h}": "by hash", "f": "by name", "postfilter:f": "pf", "*": "default"}}"#
        ))
        .unwrap();
        let cfg = GenerationConfig::default();
        let ask = |k, n, t| m.complete(&prompt(k, n, t), &cfg);
        assert_eq!(ask(PromptKind::Initial, "f", "exact").unwrap(), "by hash");
        assert_eq!(ask(PromptKind::Initial, "f", "other").unwrap(), "by name");
        assert_eq!(ask(PromptKind::Initial, "g", "other").unwrap(), "default");
        assert_eq!(ask(PromptKind::PostFilter, "f", "other").unwrap(), "pf");
        assert!(matches!(
            ask(PromptKind::PostFilter, "g", "other"),
            Err(LlmError::NoFixture { .. })
        ));
    }

    #[test]
    fn bad_fixture_file() {
        assert!(matches!(MockBackend::from_json("[1]"), Err(LlmError::Fixture(_))));
    }
}
