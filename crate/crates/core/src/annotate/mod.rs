//! From model answers to per-function annotations.

mod heuristic;
mod mapping;
mod postfilter;
mod types;

pub use heuristic::{annotate_by_heuristic, codeql_name_heuristic};
pub use mapping::{deref_assigned, map_findings_to_annotations, returned_identifiers, Mapped};
pub use postfilter::{pointed_aggregate, post_filter, struct_params, PostFilterContext, PostFilterOutcome};
pub use types::{
    AnnotationKind, AnnotationSet, FunctionAnnotation, Kind, Metadata, Provenance, Qualifiers, SetError, Slot,
};

use rayon::prelude::*;
use serde::Serialize;
use std::collections::HashSet;
use std::sync::atomic::{AtomicBool, Ordering};

use crate::ingest::{Corpus, Diagnostic, FunctionRecord};
use crate::llm::{parse_allocation_response, GenerationConfig, LlmClient, LlmError};
use crate::prompts::PromptSet;

pub const DEFAULT_CONTEXT_DEPTH: usize = 1;

#[derive(Debug, Clone)]
pub struct AnnotateConfig {
    pub generation: GenerationConfig,
    /// Callee hops included before the target in the first question.
    pub context_depth: usize,
    pub post_filter: bool,
    /// Callee hops appended after the target in the post-filter question.
    pub postfilter_context_depth: usize,
    pub qualifiers: Qualifiers,
    pub prompts: PromptSet,
}

impl Default for AnnotateConfig {
    fn default() -> Self {
        AnnotateConfig {
            generation: GenerationConfig::default(),
            context_depth: DEFAULT_CONTEXT_DEPTH,
            post_filter: true,
            postfilter_context_depth: DEFAULT_CONTEXT_DEPTH,
            qualifiers: Qualifiers::default(),
            prompts: PromptSet::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct AnnotateStats {
    pub functions: usize,
    pub queried: usize,
    pub answer_failures: usize,
    pub postfilter_queries: usize,
    pub postfilter_removed: usize,
    pub annotated: usize,
}

#[derive(Debug, Clone)]
pub struct AnnotateOutcome {
    pub set: AnnotationSet,
    pub diagnostics: Vec<Diagnostic>,
    pub stats: AnnotateStats,
}

struct Job {
    annotation: Option<FunctionAnnotation>,
    notes: Vec<String>,
    answer_failed: bool,
    pf_queries: usize,
    pf_removed: bool,
}

fn run_one(corpus: &Corpus, f: &FunctionRecord, client: &LlmClient, cfg: &AnnotateConfig) -> Result<Job, LlmError> {
    let mut job = Job {
        annotation: None,
        notes: Vec::new(),
        answer_failed: false,
        pf_queries: 0,
        pf_removed: false,
    };
    let context = corpus.callees(&f.id, cfg.context_depth).unwrap_or_default();
    let prompt = cfg.prompts.render_initial(f, &context);
    let raw = match client.complete(&prompt, &cfg.generation) {
        Ok(r) => r,
        Err(e) if !e.is_fatal() => {
            job.notes.push(e.to_string());
            job.answer_failed = true;
            return Ok(job);
        }
        Err(e) => return Err(e),
    };
    let findings = match parse_allocation_response(&raw) {
        Ok(fd) => fd,
        Err(e) => {
            job.notes.push(format!("{}: {e}; skipped", f.name));
            job.answer_failed = true;
            return Ok(job);
        }
    };
    let mapped = map_findings_to_annotations(f, &findings, &cfg.qualifiers);
    job.notes.extend(mapped.diagnostics);
    let mut annotation = mapped.annotation;
    if cfg.post_filter {
        let callees = corpus.callees(&f.id, cfg.postfilter_context_depth).unwrap_or_default();
        let cx = PostFilterContext {
            client,
            prompts: &cfg.prompts,
            generation: &cfg.generation,
            aggregates: &corpus.aggregate_typedefs,
        };
        let pf = post_filter(annotation, f, &callees, &cx);
        job.notes.extend(pf.diagnostics);
        job.pf_queries = pf.queries;
        job.pf_removed = pf.removed;
        annotation = pf.annotation;
    }
    job.annotation = Some(annotation);
    Ok(job)
}

/// Ask the model about every function definition and collect the labels.
///
/// Work fans out over a thread pool; the client's in-flight limit bounds
/// concurrent requests. Results are merged in corpus order, so the output
/// only depends on the backend answers. A fatal backend error such as a
/// missing credential aborts the run.
pub fn annotate_corpus(corpus: &Corpus, client: &LlmClient, cfg: &AnnotateConfig) -> Result<AnnotateOutcome, LlmError> {
    cfg.generation.validate()?;
    let defs: Vec<&FunctionRecord> = corpus.functions.iter().filter(|f| f.is_definition).collect();
    let abort = AtomicBool::new(false);
    let results: Vec<Option<Result<Job, LlmError>>> = defs
        .par_iter()
        .map(|f| {
            if abort.load(Ordering::SeqCst) {
                return None;
            }
            let r = run_one(corpus, f, client, cfg);
            if r.is_err() {
                abort.store(true, Ordering::SeqCst);
            }
            Some(r)
        })
        .collect();

    let mut set = AnnotationSet::new(Metadata {
        generator: format!("memanno {}", env!("CARGO_PKG_VERSION")),
        model: Some(cfg.generation.model_name.clone()),
        timestamp: None,
    });
    let mut diagnostics = Vec::new();
    let mut stats = AnnotateStats {
        functions: defs.len(),
        ..AnnotateStats::default()
    };
    let mut seen: HashSet<&str> = HashSet::new();
    for (f, r) in defs.iter().zip(results) {
        let job = match r {
            Some(Ok(j)) => j,
            Some(Err(e)) => return Err(e),
            None => continue,
        };
        let note = |message: String| Diagnostic {
            file: f.file.clone(),
            line: f.start_line,
            message,
        };
        stats.queried += 1;
        stats.answer_failures += job.answer_failed as usize;
        stats.postfilter_queries += job.pf_queries;
        stats.postfilter_removed += job.pf_removed as usize;
        diagnostics.extend(job.notes.into_iter().map(note));
        let Some(a) = job.annotation else { continue };
        if !seen.insert(f.name.as_str()) {
            if !a.is_empty() {
                diagnostics.push(note(format!(
                    "{}: another definition of this name came first; labels of this one ignored",
                    f.name
                )));
            }
            continue;
        }
        set.insert(f.name.clone(), a);
    }
    stats.annotated = set.len();
    Ok(AnnotateOutcome {
        set,
        diagnostics,
        stats,
    })
}
