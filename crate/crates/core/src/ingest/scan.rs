use globset::{Glob, GlobSet, GlobSetBuilder};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use walkdir::WalkDir;

use super::IngestError;

/// One scanned source file. Paths are relative to the corpus root and use `/`.
#[derive(Debug, Clone, Serialize)]
pub struct IndexedFile {
    pub path: String,
    pub len: u64,
    pub sha256: String,
    #[serde(skip)]
    pub content: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SkippedFile {
    pub path: String,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorpusIndex {
    pub root: PathBuf,
    pub files: Vec<IndexedFile>,
    pub skipped: Vec<SkippedFile>,
}

impl CorpusIndex {
    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    /// Build an index from in-memory sources, mostly for tests and the C ABI.
    pub fn from_sources<I, P, S>(root: impl Into<PathBuf>, sources: I) -> Self
    where
        I: IntoIterator<Item = (P, S)>,
        P: Into<String>,
        S: Into<String>,
    {
        let mut files: Vec<IndexedFile> = sources
            .into_iter()
            .map(|(p, s)| {
                let content = s.into();
                IndexedFile {
                    path: p.into(),
                    len: content.len() as u64,
                    sha256: hex::encode(Sha256::digest(content.as_bytes())),
                    content,
                }
            })
            .collect();
        files.sort_by(|a, b| a.path.cmp(&b.path));
        files.dedup_by(|a, b| a.path == b.path);
        CorpusIndex {
            root: root.into(),
            files,
            skipped: Vec::new(),
        }
    }
}

pub const DEFAULT_INCLUDE: [&str; 2] = ["*.c", "*.h"];

fn build_set(patterns: &[String]) -> Result<GlobSet, IngestError> {
    let mut b = GlobSetBuilder::new();
    for p in patterns {
        let glob = Glob::new(p).map_err(|e| IngestError::Glob {
            pattern: p.clone(),
            message: e.to_string(),
        })?;
        b.add(glob);
    }
    b.build().map_err(|e| IngestError::Glob {
        pattern: patterns.join(","),
        message: e.to_string(),
    })
}

fn matches(set: &GlobSet, rel: &str) -> bool {
    let name = rel.rsplit('/').next().unwrap_or(rel);
    set.is_match(rel) || set.is_match(name)
}

/// Walk `root` and index every file matching `include` and not `exclude`.
///
/// A pattern matches when it matches either the relative path or the bare
/// file name, so `*.c` selects C files at any depth. Files that cannot be
/// read are recorded in `skipped`.
pub fn scan_codebase(root: &Path, include: &[String], exclude: &[String]) -> Result<CorpusIndex, IngestError> {
    let meta = std::fs::metadata(root).map_err(|e| IngestError::Root {
        path: root.to_path_buf(),
        message: e.to_string(),
    })?;
    if !meta.is_dir() {
        return Err(IngestError::Root {
            path: root.to_path_buf(),
            message: "not a directory".into(),
        });
    }
    std::fs::read_dir(root).map_err(|e| IngestError::Root {
        path: root.to_path_buf(),
        message: e.to_string(),
    })?;

    let include = if include.is_empty() {
        DEFAULT_INCLUDE.iter().map(|s| s.to_string()).collect()
    } else {
        include.to_vec()
    };
    let inc = build_set(&include)?;
    let exc = build_set(exclude)?;

    let mut files = Vec::new();
    let mut skipped = Vec::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = match entry {
            Ok(e) => e,
            Err(e) => {
                let path = e
                    .path()
                    .and_then(|p| p.strip_prefix(root).ok())
                    .map(|p| p.to_string_lossy().replace('\\', "/"))
                    .unwrap_or_default();
                skipped.push(SkippedFile {
                    path,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = match entry.path().strip_prefix(root) {
            Ok(r) => r.to_string_lossy().replace('\\', "/"),
            Err(_) => continue,
        };
        if !matches(&inc, &rel) || matches(&exc, &rel) {
            continue;
        }
        match std::fs::read(entry.path()) {
            Ok(bytes) => {
                let sha256 = hex::encode(Sha256::digest(&bytes));
                files.push(IndexedFile {
                    path: rel,
                    len: bytes.len() as u64,
                    sha256,
                    content: String::from_utf8_lossy(&bytes).into_owned(),
                });
            }
            Err(e) => skipped.push(SkippedFile {
                path: rel,
                reason: e.to_string(),
            }),
        }
    }
    files.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(CorpusIndex {
        root: root.to_path_buf(),
        files,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn globs(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn include_and_exclude() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.c"), "int a;").unwrap();
        std::fs::write(dir.path().join("b.h"), "int b;").unwrap();
        std::fs::write(dir.path().join("x.txt"), "nope").unwrap();
        std::fs::create_dir(dir.path().join("sub")).unwrap();
        std::fs::write(dir.path().join("sub/c.c"), "int c;").unwrap();

        let idx = scan_codebase(dir.path(), &globs(&["*.c", "*.h"]), &[]).unwrap();
        let paths: Vec<_> = idx.files.iter().map(|f| f.path.as_str()).collect();
        assert_eq!(paths, ["a.c", "b.h", "sub/c.c"]);

        let idx = scan_codebase(dir.path(), &globs(&["*.c", "*.h"]), &globs(&["sub/**"])).unwrap();
        assert_eq!(idx.files.len(), 2);
        assert_eq!(idx.files[0].len, 6);
    }

    #[test]
    fn empty_dir_gives_empty_index() {
        let dir = tempfile::tempdir().unwrap();
        let idx = scan_codebase(dir.path(), &globs(&["*"]), &[]).unwrap();
        assert!(idx.is_empty());
    }

    #[test]
    fn missing_root_is_fatal() {
        let err = scan_codebase(Path::new("/definitely/not/here"), &[], &[]).unwrap_err();
        assert!(matches!(err, IngestError::Root { .. }));
    }

    #[test]
    fn bad_glob_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let err = scan_codebase(dir.path(), &globs(&["a[b"]), &[]).unwrap_err();
        assert!(matches!(err, IngestError::Glob { .. }));
    }
}
