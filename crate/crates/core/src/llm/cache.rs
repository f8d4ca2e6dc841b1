use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::prompts::PromptKind;

/// Content address of one completion request.
pub fn cache_key(kind: PromptKind, prompt: &str, model: &str, temperature: f64) -> String {
    let mut h = Sha256::new();
    for part in [kind.as_str(), model, &format!("{temperature:?}"), prompt] {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part.as_bytes());
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CacheEntry {
    pub prompt_hash: String,
    pub model: String,
    pub text: String,
    pub timestamp: u64,
}

pub enum Lookup {
    Hit(CacheEntry),
    Miss,
    /// The file exists but does not hold a matching entry.
    Corrupt(String),
}

/// Completions stored as `<dir>/<k[0..2]>/<k>.json`.
#[derive(Debug, Clone)]
pub struct ResponseCache {
    dir: PathBuf,
}

impl ResponseCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        ResponseCache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(&key[..2]).join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Lookup {
        let p = self.path(key);
        let bytes = match std::fs::read(&p) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Lookup::Miss,
            Err(e) => return Lookup::Corrupt(format!("{}: {e}", p.display())),
        };
        match serde_json::from_slice::<CacheEntry>(&bytes) {
            Ok(entry) if entry.prompt_hash == key => Lookup::Hit(entry),
            Ok(_) => Lookup::Corrupt(format!("{}: key mismatch", p.display())),
            Err(e) => Lookup::Corrupt(format!("{}: {e}", p.display())),
        }
    }

    /// Write through a temporary file and rename, so readers never observe a
    /// partial entry.
    pub fn put(&self, entry: &CacheEntry) -> std::io::Result<()> {
        let p = self.path(&entry.prompt_hash);
        let parent = p.parent().expect("cache path has a parent");
        std::fs::create_dir_all(parent)?;
        let tmp = parent.join(format!(
            ".{}.{}.{:?}.tmp",
            entry.prompt_hash,
            std::process::id(),
            std::thread::current().id()
        ));
        {
            let mut f = std::fs::File::create(&tmp)?;
            f.write_all(&serde_json::to_vec_pretty(entry).expect("entry serializes"))?;
            f.sync_all()?;
        }
        std::fs::rename(&tmp, &p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_separates_fields() {
        let a = cache_key(PromptKind::Initial, "ab", "m", 0.0);
        assert_eq!(a.len(), 64);
        assert_ne!(a, cache_key(PromptKind::PostFilter, "ab", "m", 0.0));
        assert_ne!(a, cache_key(PromptKind::Initial, "ab", "m", 0.5));
        assert_ne!(a, cache_key(PromptKind::Initial, "b", "am", 0.0));
        assert_eq!(a, cache_key(PromptKind::Initial, "ab", "m", 0.0));
    }

    #[test]
    fn roundtrip_and_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let c = ResponseCache::new(dir.path());
        let key = cache_key(PromptKind::Initial, "p", "m", 0.0);
        assert!(matches!(c.get(&key), Lookup::Miss));
        let e = CacheEntry {
            prompt_hash: key.clone(),
            model: "m".into(),
            text: "hello".into(),
            timestamp: 1,
        };
        c.put(&e).unwrap();
        match c.get(&key) {
            Lookup::Hit(h) => assert_eq!(h.text, "hello"),
            _ => panic!("expected hit"),
        }
        std::fs::write(c.path(&key), b"{ truncated").unwrap();
        assert!(matches!(c.get(&key), Lookup::Corrupt(_)));
    }
}
