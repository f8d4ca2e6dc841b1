//! Corpus scanning, function extraction and the call graph used for prompt
//! context.

mod callgraph;
mod cond;
mod extract;
pub mod lexer;
mod scan;

pub(crate) use callgraph::body_open;
pub use callgraph::{build_call_graph, called_names, callees_of, CallGraph};
pub use extract::{
    extract_from_source, extract_functions, Diagnostic, ExtractOptions, Extraction, FunctionId, FunctionRecord, Param,
};
pub use scan::{scan_codebase, CorpusIndex, IndexedFile, SkippedFile, DEFAULT_INCLUDE};

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot read corpus root {path}: {message}")]
    Root { path: PathBuf, message: String },
    #[error("invalid glob '{pattern}': {message}")]
    Glob { pattern: String, message: String },
    #[error("unknown function id '{0}'")]
    UnknownFunction(String),
}

#[derive(Debug, Clone, Default)]
pub struct ScanOptions {
    pub include: Vec<String>,
    pub exclude: Vec<String>,
    pub extract: ExtractOptions,
}

/// A fully ingested corpus. Immutable once built.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub index: CorpusIndex,
    pub functions: Vec<FunctionRecord>,
    pub aggregate_typedefs: BTreeSet<String>,
    pub graph: CallGraph,
    pub diagnostics: Vec<Diagnostic>,
    by_id: HashMap<FunctionId, usize>,
}

impl Corpus {
    pub fn load(root: &Path, opts: &ScanOptions) -> Result<Self, IngestError> {
        let index = scan_codebase(root, &opts.include, &opts.exclude)?;
        Ok(Self::from_index(index, &opts.extract))
    }

    pub fn from_index(index: CorpusIndex, opts: &ExtractOptions) -> Self {
        let ex = extract_functions(&index, opts);
        let graph = build_call_graph(&ex.functions);
        let by_id = ex
            .functions
            .iter()
            .enumerate()
            .map(|(i, f)| (f.id.clone(), i))
            .collect();
        Corpus {
            index,
            functions: ex.functions,
            aggregate_typedefs: ex.aggregate_typedefs,
            graph,
            diagnostics: ex.diagnostics,
            by_id,
        }
    }

    pub fn get(&self, id: &FunctionId) -> Option<&FunctionRecord> {
        self.by_id.get(id).map(|&i| &self.functions[i])
    }

    pub fn callees(&self, id: &FunctionId, depth: usize) -> Result<Vec<&FunctionRecord>, IngestError> {
        let ids = self.graph.callee_ids(id, depth)?;
        Ok(ids.iter().filter_map(|i| self.get(i)).collect())
    }

    /// Arity per function name; the first definition wins for homonyms.
    pub fn arities(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for f in &self.functions {
            out.entry(f.name.clone()).or_insert(f.arity());
        }
        out
    }

    /// JSON dump of the extracted function records.
    pub fn dump_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.functions).expect("records serialize");
        s.push('\n');
        s
    }
}
