//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 corpus error,
//! 3 backend error.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::collections::BTreeSet;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::annotate::{annotate_by_heuristic, annotate_corpus, AnnotateStats, AnnotationSet, Kind, Qualifiers};
use crate::config::{BackendKind, RunConfig};
use crate::emit::{emit_codeql_models, emit_cooddy};
use crate::evaluate::{intersect, load_ground_truth, score};
use crate::ingest::{Corpus, ExtractOptions, ScanOptions};
use crate::leakcheck::{check_corpus, Builtins, CheckReport, LeakWarning};
use crate::llm::{CompletionBackend, LlmClient, MockBackend, RemoteBackend, ResponseCache};
use crate::prompts::PromptSet;

#[derive(Debug, Parser)]
#[command(
    name = "memanno",
    version,
    about = "Allocation and deallocation annotations for C code"
)]
pub struct Cli {
    /// TOML run configuration; flags override it.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Machine-readable output on stdout.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Query the model for every function and write an annotation file.
    Annotate(AnnotateArgs),
    /// Convert an annotation file to an analyzer format.
    Emit(EmitArgs),
    /// Score predictions against ground truth.
    Score(ScoreArgs),
    /// Name overlap of two annotation files.
    Intersect(IntersectArgs),
    /// Run the leak checker.
    Check(CheckArgs),
    /// annotate, emit both formats, check with and without annotations.
    Pipeline(PipelineArgs),
    /// Print the extracted function records.
    DumpCorpus(DumpArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CorpusArgs {
    /// Corpus root directory.
    #[arg(long, value_name = "DIR")]
    pub corpus: Option<PathBuf>,
    #[arg(long, value_name = "GLOB")]
    pub include: Vec<String>,
    #[arg(long, value_name = "GLOB")]
    pub exclude: Vec<String>,
    /// Treat this macro as undefined when resolving #ifdef branches.
    #[arg(long, value_name = "MACRO")]
    pub assume_undefined: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Annotator {
    Llm,
    Heuristic,
}

#[derive(Debug, Clone, Args)]
pub struct LlmArgs {
    #[arg(long, value_enum, default_value = "llm")]
    pub annotator: Annotator,
    #[arg(long, value_enum)]
    pub backend: Option<BackendKind>,
    /// Mock fixture file.
    #[arg(long, value_name = "FILE")]
    pub fixtures: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long, value_name = "URL")]
    pub endpoint: Option<String>,
    /// Environment variable holding the API key.
    #[arg(long, value_name = "VAR")]
    pub api_key_env: Option<String>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub max_output_tokens: Option<u32>,
    #[arg(long)]
    pub max_retries: Option<u32>,
    #[arg(long)]
    pub max_in_flight: Option<usize>,
    /// Callee hops included as context (0 disables context).
    #[arg(long)]
    pub context_depth: Option<usize>,
    #[arg(long, overrides_with = "no_post_filter")]
    pub post_filter: bool,
    #[arg(long, overrides_with = "post_filter")]
    pub no_post_filter: bool,
    #[arg(long, value_name = "DIR")]
    pub cache_dir: Option<PathBuf>,
    #[arg(long)]
    pub no_cache: bool,
    /// Directory with replacement initial.txt / postfilter.txt templates.
    #[arg(long, value_name = "DIR")]
    pub prompts: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnnotateArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub llm: LlmArgs,
    /// Annotation file to write.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Cooddy,
    Codeql,
}

#[derive(Debug, Args)]
pub struct EmitArgs {
    #[arg(long, value_enum)]
    pub format: Format,
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    /// Take arities from this corpus instead of the annotation file.
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Output file; stdout when absent.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long, value_name = "FILE")]
    pub predicted: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub ground_truth: PathBuf,
    /// Compare (slot, kind) pairs instead of the allocates/deallocates profile.
    #[arg(long)]
    pub strict_slots: bool,
}

#[derive(Debug, Args)]
pub struct IntersectArgs {
    pub a: PathBuf,
    pub b: PathBuf,
    #[arg(long, default_value = "A")]
    pub label_a: String,
    #[arg(long, default_value = "B")]
    pub label_b: String,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Annotation file, or `none`.
    #[arg(long, value_name = "FILE|none")]
    pub annotations: String,
    /// Builtin allocator table; the stock table when absent.
    #[arg(long, value_name = "FILE")]
    pub builtins: Option<PathBuf>,
    /// Also write the JSON report here.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[command(flatten)]
    pub llm: LlmArgs,
    #[arg(long, value_name = "FILE")]
    pub builtins: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DumpArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Print the call graph instead of the records.
    #[arg(long)]
    pub graph: bool,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Corpus(String),
    Backend(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Corpus(_) => 2,
            CliError::Backend(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Corpus(m) | CliError::Backend(m) => m,
        }
    }
}

type Res<T> = Result<T, CliError>;

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

struct Io<'a> {
    out: &'a mut dyn Write,
    err: &'a mut dyn Write,
    json: bool,
}

impl Io<'_> {
    fn print(&mut self, s: &str) {
        let _ = self.out.write_all(s.as_bytes());
    }

    fn warn(&mut self, s: &str) {
        let _ = writeln!(self.err, "warning: {s}");
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn write_file(path: &Path, content: &str) -> Res<()> {
    std::fs::write(path, content).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
}

/// Reject an output file path that cannot be written, before doing work.
fn check_output_file(path: &Path) -> Res<()> {
    if path.is_dir() {
        return Err(usage(format!("output path {} is a directory", path.display())));
    }
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    if !parent.is_dir() {
        return Err(usage(format!(
            "cannot write {}: directory {} does not exist",
            path.display(),
            parent.display()
        )));
    }
    let existed = path.exists();
    std::fs::OpenOptions::new()
        .append(true)
        .create(true)
        .open(path)
        .map_err(|e| usage(format!("cannot write {}: {e}", path.display())))?;
    if !existed {
        let _ = std::fs::remove_file(path);
    }
    Ok(())
}

fn base_config(cli_config: &Option<PathBuf>) -> Res<RunConfig> {
    match cli_config {
        Some(p) => RunConfig::load(p).map_err(usage),
        None => Ok(RunConfig::default()),
    }
}

fn apply_corpus(cfg: &mut RunConfig, a: &CorpusArgs) {
    if let Some(r) = &a.corpus {
        cfg.corpus.root = Some(r.clone());
    }
    if !a.include.is_empty() {
        cfg.corpus.include = a.include.clone();
    }
    if !a.exclude.is_empty() {
        cfg.corpus.exclude = a.exclude.clone();
    }
    if !a.assume_undefined.is_empty() {
        cfg.corpus.assume_undefined = a.assume_undefined.clone();
    }
}

fn apply_llm(cfg: &mut RunConfig, a: &LlmArgs) {
    let b = &mut cfg.backend;
    if let Some(k) = a.backend {
        b.kind = k;
    }
    if let Some(f) = &a.fixtures {
        b.fixtures = Some(f.clone());
    }
    if let Some(m) = &a.model {
        b.model_name = m.clone();
    }
    if let Some(e) = &a.endpoint {
        b.endpoint = Some(e.clone());
    }
    if let Some(v) = &a.api_key_env {
        b.api_key_env = v.clone();
    }
    if let Some(t) = a.temperature {
        b.temperature = t;
    }
    if let Some(t) = a.max_output_tokens {
        b.max_output_tokens = t;
    }
    if let Some(r) = a.max_retries {
        b.max_retries = r;
    }
    if let Some(n) = a.max_in_flight {
        b.max_in_flight = n;
    }
    let an = &mut cfg.annotate;
    if let Some(d) = a.context_depth {
        an.context_depth = d;
    }
    if a.post_filter {
        an.post_filter = true;
    }
    if a.no_post_filter {
        an.post_filter = false;
    }
    if let Some(p) = &a.prompts {
        an.prompts_dir = Some(p.clone());
    }
    if let Some(c) = &a.cache_dir {
        cfg.cache.dir = Some(c.clone());
    }
    if a.no_cache {
        cfg.cache.dir = None;
    }
}

fn load_corpus(cfg: &RunConfig) -> Res<Corpus> {
    let root = cfg
        .corpus
        .root
        .clone()
        .ok_or_else(|| usage("no corpus root given (--corpus or corpus.root)"))?;
    let opts = ScanOptions {
        include: cfg.corpus.include.clone(),
        exclude: cfg.corpus.exclude.clone(),
        extract: ExtractOptions {
            assume_undefined: cfg.corpus.assume_undefined.iter().cloned().collect(),
        },
    };
    Corpus::load(&root, &opts).map_err(|e| match e {
        crate::ingest::IngestError::Glob { .. } => usage(e),
        _ => CliError::Corpus(e.to_string()),
    })
}

fn build_client(cfg: &RunConfig) -> Res<LlmClient> {
    let backend: Arc<dyn CompletionBackend> = match cfg.backend.kind {
        BackendKind::Mock => {
            let path = cfg.backend.fixtures.as_ref().expect("validated");
            Arc::new(MockBackend::load(path).map_err(|e| CliError::Backend(e.to_string()))?)
        }
        BackendKind::Remote => Arc::new(
            RemoteBackend::new(&cfg.backend.generation(), cfg.backend.remote_options())
                .map_err(|e| CliError::Backend(e.to_string()))?,
        ),
    };
    let mut client = LlmClient::new(backend).with_max_in_flight(cfg.backend.max_in_flight);
    if let Some(dir) = &cfg.cache.dir {
        client = client.with_cache(ResponseCache::new(dir));
    }
    Ok(client)
}

#[derive(Debug, Serialize)]
struct RunStats {
    #[serde(flatten)]
    annotate: AnnotateStats,
    backend_calls: usize,
    cache_hits: usize,
}

/// Produce the annotation set per the configuration. Returns the set and,
/// for model runs, request statistics.
fn produce_annotations(
    cfg: &RunConfig,
    annotator: Annotator,
    corpus: &Corpus,
    io: &mut Io<'_>,
) -> Res<(AnnotationSet, Option<RunStats>)> {
    let qualifiers = Qualifiers {
        alloc: cfg.annotate.alloc_qualifier,
        free: cfg.annotate.free_qualifier,
    };
    if annotator == Annotator::Heuristic {
        return Ok((annotate_by_heuristic(&corpus.functions, &qualifiers), None));
    }
    let mut acfg = cfg.annotate_config();
    if let Some(dir) = &cfg.annotate.prompts_dir {
        acfg.prompts = PromptSet::from_dir(dir).map_err(usage)?;
    }
    let client = build_client(cfg)?;
    let outcome = annotate_corpus(corpus, &client, &acfg).map_err(|e| CliError::Backend(e.to_string()))?;
    for d in &outcome.diagnostics {
        io.warn(&format!("{}:{}: {}", d.file, d.line, d.message));
    }
    let stats = RunStats {
        annotate: outcome.stats,
        backend_calls: client.backend_calls(),
        cache_hits: client.cache_hits(),
    };
    Ok((outcome.set, Some(stats)))
}

fn prepare_run(cli_config: &Option<PathBuf>, corpus: &CorpusArgs, llm: &LlmArgs) -> Res<RunConfig> {
    let mut cfg = base_config(cli_config)?;
    apply_corpus(&mut cfg, corpus);
    apply_llm(&mut cfg, llm);
    if llm.annotator == Annotator::Llm {
        cfg.validate().map_err(usage)?;
    }
    Ok(cfg)
}

fn cmd_annotate(cli: &Cli, a: &AnnotateArgs, io: &mut Io<'_>) -> Res<()> {
    let cfg = prepare_run(&cli.config, &a.corpus, &a.llm)?;
    let out = a
        .out
        .clone()
        .or_else(|| cfg.output.annotations.clone())
        .ok_or_else(|| usage("no output file given (--out or output.annotations)"))?;
    check_output_file(&out)?;
    let corpus = load_corpus(&cfg)?;
    let (set, stats) = produce_annotations(&cfg, a.llm.annotator, &corpus, io)?;
    write_file(&out, &set.to_json())?;
    if io.json {
        io.print(&to_json(&serde_json::json!({
            "output": out.display().to_string(),
            "annotated": set.len(),
            "stats": stats,
        })));
    } else {
        io.print(&format!(
            "wrote {} annotated functions to {}\n",
            set.len(),
            out.display()
        ));
        if let Some(s) = stats {
            io.print(&format!(
                "functions {}  answer failures {}  post-filter removed {}  backend calls {}  cache hits {}\n",
                s.annotate.functions,
                s.annotate.answer_failures,
                s.annotate.postfilter_removed,
                s.backend_calls,
                s.cache_hits
            ));
        }
    }
    Ok(())
}

fn load_set(path: &Path) -> Res<AnnotationSet> {
    AnnotationSet::load(path).map_err(usage)
}

fn cmd_emit(cli: &Cli, a: &EmitArgs, io: &mut Io<'_>) -> Res<()> {
    if let Some(o) = &a.out {
        check_output_file(o)?;
    }
    let set = load_set(&a.input)?;
    let mut cfg = base_config(&cli.config)?;
    apply_corpus(&mut cfg, &a.corpus);
    let arities = if a.corpus.corpus.is_some() {
        load_corpus(&cfg)?.arities()
    } else {
        Default::default()
    };
    let (text, summary) = match a.format {
        Format::Cooddy => {
            let t = emit_cooddy(&set, &arities).map_err(usage)?;
            (t, serde_json::json!({"format": "cooddy", "functions": set.len()}))
        }
        Format::Codeql => {
            let m = emit_codeql_models(&set);
            let s = serde_json::json!({"format": "codeql", "rows": m.rows.len(), "dropped": m.dropped});
            (m.text, s)
        }
    };
    match &a.out {
        Some(o) => {
            write_file(o, &text)?;
            if io.json {
                io.print(&to_json(&summary));
            } else if let Some(d) = summary.get("dropped") {
                io.print(&format!(
                    "wrote {} ({} rows, {d} entries dropped)\n",
                    o.display(),
                    summary["rows"]
                ));
            } else {
                io.print(&format!("wrote {}\n", o.display()));
            }
        }
        None => io.print(&text),
    }
    Ok(())
}

fn cmd_score(a: &ScoreArgs, io: &mut Io<'_>) -> Res<()> {
    let predicted = load_set(&a.predicted)?;
    let gt = load_ground_truth(&a.ground_truth).map_err(usage)?;
    let r = score(&predicted, &gt, a.strict_slots);
    io.print(&if io.json { r.to_json() } else { r.to_table() });
    Ok(())
}

fn cmd_intersect(a: &IntersectArgs, io: &mut Io<'_>) -> Res<()> {
    let r = intersect(&load_set(&a.a)?, &load_set(&a.b)?);
    io.print(&if io.json {
        r.to_json()
    } else {
        r.to_table(&a.label_a, &a.label_b)
    });
    Ok(())
}

fn load_builtins(p: &Option<PathBuf>) -> Res<Builtins> {
    match p {
        Some(p) => Builtins::load(p).map_err(usage),
        None => Ok(Builtins::stock()),
    }
}

fn cmd_check(cli: &Cli, a: &CheckArgs, io: &mut Io<'_>) -> Res<()> {
    if let Some(o) = &a.out {
        check_output_file(o)?;
    }
    let mut cfg = base_config(&cli.config)?;
    apply_corpus(&mut cfg, &a.corpus);
    let set = match a.annotations.as_str() {
        "none" => None,
        p => Some(load_set(Path::new(p))?),
    };
    let builtins = load_builtins(&a.builtins)?;
    let corpus = load_corpus(&cfg)?;
    let report = check_corpus(&corpus.functions, set.as_ref(), &builtins);
    if let Some(o) = &a.out {
        write_file(o, &report.to_json())?;
    }
    io.print(&if io.json { report.to_json() } else { report.to_text() });
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct PipelineSummary {
    pub functions: usize,
    pub annotated: usize,
    pub alloc_source: usize,
    pub free_sink: usize,
    pub codeql_rows: usize,
    pub codeql_dropped: usize,
    pub warnings_without: usize,
    pub warnings_with: usize,
    pub delta: i64,
    /// Warnings present only with annotations.
    pub new_warnings: Vec<String>,
    /// Warnings present only without annotations.
    pub resolved_warnings: Vec<String>,
}

fn warning_key(w: &LeakWarning) -> String {
    format!("{}:{} {} {}", w.file, w.alloc_site, w.function, w.variable)
}

fn summarize(
    corpus: &Corpus,
    set: &AnnotationSet,
    rows: usize,
    dropped: usize,
    without: &CheckReport,
    with: &CheckReport,
) -> PipelineSummary {
    let a: BTreeSet<String> = without.warnings.iter().map(warning_key).collect();
    let b: BTreeSet<String> = with.warnings.iter().map(warning_key).collect();
    PipelineSummary {
        functions: corpus.functions.iter().filter(|f| f.is_definition).count(),
        annotated: set.len(),
        alloc_source: set.count(Kind::AllocSource),
        free_sink: set.count(Kind::FreeSink),
        codeql_rows: rows,
        codeql_dropped: dropped,
        warnings_without: without.total,
        warnings_with: with.total,
        delta: with.total as i64 - without.total as i64,
        new_warnings: b.difference(&a).cloned().collect(),
        resolved_warnings: a.difference(&b).cloned().collect(),
    }
}

fn summary_text(s: &PipelineSummary) -> String {
    let mut t = String::new();
    t.push_str(&format!("functions        {}\n", s.functions));
    t.push_str(&format!(
        "annotated        {} ({} AllocSource, {} FreeSink)\n",
        s.annotated, s.alloc_source, s.free_sink
    ));
    t.push_str(&format!(
        "codeql rows      {} ({} entries dropped)\n",
        s.codeql_rows, s.codeql_dropped
    ));
    t.push_str(&format!(
        "warnings         without {}  with {}  delta {:+}\n",
        s.warnings_without, s.warnings_with, s.delta
    ));
    for w in &s.new_warnings {
        t.push_str(&format!("  new       {w}\n"));
    }
    for w in &s.resolved_warnings {
        t.push_str(&format!("  resolved  {w}\n"));
    }
    t
}

fn cmd_pipeline(cli: &Cli, a: &PipelineArgs, io: &mut Io<'_>) -> Res<()> {
    let cfg = prepare_run(&cli.config, &a.corpus, &a.llm)?;
    let dir = a
        .out_dir
        .clone()
        .or_else(|| cfg.output.dir.clone())
        .ok_or_else(|| usage("no output directory given (--out-dir or output.dir)"))?;
    std::fs::create_dir_all(&dir).map_err(|e| usage(format!("cannot create {}: {e}", dir.display())))?;
    for f in [
        "annotations.json",
        "cooddy.json",
        "codeql_models.tsv",
        "check_without.json",
        "check_with.json",
        "summary.json",
    ] {
        check_output_file(&dir.join(f))?;
    }
    let builtins = load_builtins(&a.builtins)?;
    let corpus = load_corpus(&cfg)?;
    let (set, stats) = produce_annotations(&cfg, a.llm.annotator, &corpus, io)?;
    let cooddy = emit_cooddy(&set, &corpus.arities()).map_err(usage)?;
    let models = emit_codeql_models(&set);
    let without = check_corpus(&corpus.functions, None, &builtins);
    let with = check_corpus(&corpus.functions, Some(&set), &builtins);
    let summary = summarize(&corpus, &set, models.rows.len(), models.dropped, &without, &with);

    write_file(&dir.join("annotations.json"), &set.to_json())?;
    write_file(&dir.join("cooddy.json"), &cooddy)?;
    write_file(&dir.join("codeql_models.tsv"), &models.text)?;
    write_file(&dir.join("check_without.json"), &without.to_json())?;
    write_file(&dir.join("check_with.json"), &with.to_json())?;
    write_file(&dir.join("summary.json"), &to_json(&summary))?;

    if io.json {
        io.print(&to_json(&serde_json::json!({"summary": summary, "stats": stats})));
    } else {
        io.print(&summary_text(&summary));
        if let Some(s) = stats {
            io.print(&format!(
                "backend calls    {}  cache hits {}\n",
                s.backend_calls, s.cache_hits
            ));
        }
    }
    Ok(())
}

fn cmd_dump(cli: &Cli, a: &DumpArgs, io: &mut Io<'_>) -> Res<()> {
    if let Some(o) = &a.out {
        check_output_file(o)?;
    }
    let mut cfg = base_config(&cli.config)?;
    apply_corpus(&mut cfg, &a.corpus);
    let corpus = load_corpus(&cfg)?;
    for d in &corpus.diagnostics {
        io.warn(&format!("{}:{}: {}", d.file, d.line, d.message));
    }
    let text = if a.graph {
        to_json(&corpus.graph)
    } else {
        corpus.dump_json()
    };
    match &a.out {
        Some(o) => write_file(o, &text)?,
        None => io.print(&text),
    }
    Ok(())
}

fn dispatch(cli: &Cli, io: &mut Io<'_>) -> Res<()> {
    match &cli.command {
        Command::Annotate(a) => cmd_annotate(cli, a, io),
        Command::Emit(a) => cmd_emit(cli, a, io),
        Command::Score(a) => cmd_score(a, io),
        Command::Intersect(a) => cmd_intersect(a, io),
        Command::Check(a) => cmd_check(cli, a, io),
        Command::Pipeline(a) => cmd_pipeline(cli, a, io),
        Command::DumpCorpus(a) => cmd_dump(cli, a, io),
    }
}

/// Parse `args` (program name first) and run. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    let _ = write!(err, "{e}");
                    1
                }
            };
        }
    };
    let mut io = Io {
        out,
        err,
        json: cli.json,
    };
    match dispatch(&cli, &mut io) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(io.err, "error: {}", e.message());
            e.code()
        }
    }
}
