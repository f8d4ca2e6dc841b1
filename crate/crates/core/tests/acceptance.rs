//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

mod common;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use common::*;
use memanno::annotate::{
    annotate_by_heuristic, annotate_corpus, codeql_name_heuristic, AnnotateConfig, AnnotationSet, FunctionAnnotation,
    Kind, Metadata, Provenance, Qualifiers, Slot,
};
use memanno::emit::{emit_cooddy, parse_cooddy};
use memanno::evaluate::EvaluationReport;
use memanno::ingest::{Corpus, ExtractOptions, ScanOptions};
use memanno::leakcheck::{check_function, Builtins, LeakReason};
use memanno::llm::{LlmClient, MockBackend};
use proptest::test_runner::{Config, TestCaseError, TestRunner};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn within(start: Instant, limit: Duration, what: &str) -> Result<(), String> {
    let took = start.elapsed();
    if took > limit {
        return Err(format!("{what} took {took:?}, limit {limit:?}"));
    }
    Ok(())
}

// (TP, FP, FN, printed precision, printed recall, printed #)
const TABLE: [(&str, usize, usize, usize, f64, f64, usize); 12] = [
    ("DeepSeek-R1-70B", 31, 23, 17, 0.574, 0.646, 54),
    ("DeepSeek-R1-70B+PF", 30, 12, 18, 0.714, 0.625, 42),
    ("DeepSeek-R1-70B+CE", 29, 23, 18, 0.558, 0.617, 52),
    ("DeepSeek-R1-70B+CE+PF", 28, 13, 19, 0.683, 0.596, 41),
    ("Codestral", 28, 12, 20, 0.7, 0.583, 40),
    ("Codestral+PF", 28, 2, 20, 0.933, 0.583, 31),
    ("Codestral+CE", 23, 14, 24, 0.622, 0.489, 37),
    ("Codestral+CE+PF", 22, 6, 25, 0.786, 0.468, 28),
    ("Qwen2.5-Coder-32B", 31, 12, 16, 0.721, 0.66, 43),
    ("Qwen2.5-Coder-32B+PF", 29, 3, 18, 0.906, 0.617, 32),
    ("Qwen2.5-Coder-32B+CE", 28, 10, 20, 0.737, 0.583, 38),
    ("Qwen2.5-Coder-32B+CE+PF", 27, 2, 21, 0.931, 0.562, 29),
];

fn metric_oracle() -> Outcome {
    let start = Instant::now();
    let mut problems = Vec::new();
    for (row, tp, fp, fn_, prec, rec, total) in TABLE {
        let r = EvaluationReport::from_counts(tp, fp, fn_);
        let p = r.precision.unwrap_or(f64::NAN);
        let c = r.recall.unwrap_or(f64::NAN);
        if (p - prec).abs() > 0.001 {
            problems.push(format!("{row}: precision {p:.4} vs printed {prec}"));
        }
        if (c - rec).abs() > 0.001 {
            problems.push(format!("{row}: recall {c:.4} vs printed {rec}"));
        }
        if r.total_annotated != total {
            problems.push(format!("{row}: TP+FP = {} vs printed # {total}", r.total_annotated));
        }
    }
    within(start, Duration::from_secs(1), "metric oracle")?;
    if problems.is_empty() {
        Ok("12 rows reproduce precision, recall and #".into())
    } else {
        Err(problems.join("; "))
    }
}

fn cooddy_golden() -> Outcome {
    let mut set = AnnotationSet::new(Metadata::default());
    let mut a = FunctionAnnotation::new(None, Provenance::Manual, Some(1));
    a.entries
        .insert(Slot::Return, Qualifiers::default().of(Kind::AllocSource));
    set.insert("solv_chksum_create", a.clone());
    let out = emit_cooddy(&set, &BTreeMap::new()).map_err(|e| e.to_string())?;
    let golden =
        std::fs::read_to_string(fixture("golden/solv_chksum_create.cooddy.json")).map_err(|e| e.to_string())?;
    if out != golden {
        return Err(format!("output differs from golden file:\n{out}"));
    }
    let back = parse_cooddy(&out).map_err(|e| e.to_string())?;
    let f = back.get("solv_chksum_create").ok_or("round trip lost the function")?;
    if back.len() != 1 || f.arity != 1 || f.entries != a.entries {
        return Err(format!("round trip mismatch: {back:?}"));
    }
    Ok("bit-exact, round trip restores the set".into())
}

fn name_heuristic() -> Outcome {
    let cases = [
        (
            "void *cJSON_malloc(size_t size) { return global_hooks.allocate(size); }",
            true,
        ),
        ("void *my_alloc(size_t n) { return malloc(n); }", true),
        ("void *solv_chksum_create(Id type) { return 0; }", false),
        ("void *pool_alloc(size_t n, size_t m) { return calloc(n, m); }", false),
    ];
    for (src, expect) in cases {
        let fs = functions("h.c", src);
        let f = fs.first().ok_or_else(|| format!("no function in {src}"))?;
        if codeql_name_heuristic(f) != expect {
            return Err(format!("{}: expected {expect}", f.name));
        }
    }
    let opts = ScanOptions {
        extract: ExtractOptions {
            assume_undefined: ["_MSC_VER".to_string()].into_iter().collect(),
        },
        ..Default::default()
    };
    let corpus = Corpus::load(&fixture("cjson"), &opts).map_err(|e| e.to_string())?;
    let set = annotate_by_heuristic(&corpus.functions, &Qualifiers::default());
    let names: Vec<&String> = set.names().collect();
    if names != ["cJSON_malloc"] {
        return Err(format!("cJSON heuristic marks {names:?}, expected [cJSON_malloc]"));
    }
    Ok("4 signatures classified, cJSON marks exactly 1".into())
}

fn synthetic() -> Corpus {
    Corpus::load(&fixture("synthetic/src"), &ScanOptions::default()).expect("synthetic corpus")
}

fn annotate_with(corpus: &Corpus, mock: MockBackend, post_filter: bool) -> Result<AnnotationSet, String> {
    let client = LlmClient::new(Arc::new(mock));
    let cfg = AnnotateConfig {
        post_filter,
        ..AnnotateConfig::default()
    };
    annotate_corpus(corpus, &client, &cfg)
        .map(|o| o.set)
        .map_err(|e| e.to_string())
}

fn entries_subset(after: &AnnotationSet, before: &AnnotationSet) -> Result<(), String> {
    for (name, a) in after.iter() {
        let b = before
            .get(name)
            .ok_or_else(|| format!("{name} appears only after post-filter"))?;
        for (slot, k) in &a.entries {
            if b.entries.get(slot) != Some(k) {
                return Err(format!("{name}: entry {slot} not present before post-filter"));
            }
        }
    }
    Ok(())
}

fn mock_pipeline() -> Outcome {
    let start = Instant::now();
    let corpus = synthetic();
    let mock = MockBackend::load(&fixture("synthetic/mock_llm.json")).map_err(|e| e.to_string())?;
    let before = annotate_with(&corpus, mock.clone(), false)?;
    let after = annotate_with(&corpus, mock, true)?;
    let names = |s: &AnnotationSet| s.names().cloned().collect::<BTreeSet<_>>();
    let seeded: BTreeSet<String> = ["dup_string", "my_free", "pool_create", "pool_get_chunk"]
        .map(String::from)
        .into();
    if names(&before) != seeded {
        return Err(format!("annotated {:?}, seeded {seeded:?}", names(&before)));
    }
    let removed: Vec<String> = names(&before).difference(&names(&after)).cloned().collect();
    if removed != ["pool_get_chunk"] {
        return Err(format!("post-filter removed {removed:?}"));
    }
    for n in names(&after) {
        if after.get(&n).map(|a| &a.entries) != before.get(&n).map(|a| &a.entries) {
            return Err(format!("post-filter changed {n}"));
        }
    }
    entries_subset(&after, &before)?;

    // Random post-filter verdicts and random initial answers: the filter only
    // ever removes entries.
    let candidates: Vec<String> = corpus.functions.iter().map(|f| f.name.clone()).collect();
    let base: HashMap<String, String> =
        serde_json::from_str(&std::fs::read_to_string(fixture("synthetic/mock_llm.json")).unwrap()).unwrap();
    let mut runner = TestRunner::new(Config {
        cases: 24,
        failure_persistence: None,
        ..Config::default()
    });
    let strat = (
        proptest::collection::vec(proptest::bool::ANY, candidates.len()),
        proptest::collection::vec(proptest::bool::ANY, candidates.len()),
    );
    runner
        .run(&strat, |(yes, keep)| {
            let mut map = base.clone();
            for (i, n) in candidates.iter().enumerate() {
                let answer = if yes[i] { "Yes" } else { "No" };
                map.insert(format!("postfilter:{n}"), format!("{{\"answer\": \"{answer}\"}}"));
                if !keep[i] {
                    map.remove(n);
                }
            }
            let m = MockBackend::from_map(map);
            let b = annotate_with(&corpus, m.clone(), false).map_err(TestCaseError::fail)?;
            let a = annotate_with(&corpus, m, true).map_err(TestCaseError::fail)?;
            entries_subset(&a, &b).map_err(TestCaseError::fail)
        })
        .map_err(|e| e.to_string())?;
    within(start, Duration::from_secs(5), "mock pipeline")?;
    Ok("4 seeded functions, post-filter removes pool_get_chunk only, subset holds over 24 random cases".into())
}

fn leak_flip() -> Outcome {
    let corpus = Corpus::load(&fixture("libsolv"), &ScanOptions::default()).map_err(|e| e.to_string())?;
    let f = corpus
        .functions
        .iter()
        .find(|f| f.name == "repo_add_rpm_head")
        .ok_or("fixture function missing")?;
    let annotated = AnnotationSet::load(&fixture("libsolv/annotations.json")).map_err(|e| e.to_string())?;
    let builtins = Builtins::stock();
    let with = check_function(f, &annotated, &builtins);
    let without = check_function(f, &AnnotationSet::default(), &builtins);
    if !without.is_empty() {
        return Err(format!("{} warnings without annotations", without.len()));
    }
    match with.as_slice() {
        [w] if w.variable == "leadsigchksumh" && w.reason == LeakReason::NeverFreed => Ok(format!(
            "NeverFreed on leadsigchksumh (line {}) appears only with the annotation",
            w.alloc_site
        )),
        other => Err(format!("unexpected warnings with annotations: {other:?}")),
    }
}

fn monotonicity() -> Outcome {
    let start = Instant::now();
    let builtins = Builtins::stock();
    let mut runner = TestRunner::new(Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    });
    let strat = (body(), 0u8..16, 0u8..16, 0u8..8, 0u8..8);
    runner
        .run(&strat, |(body, a_small, a_extra, f_small, f_extra)| {
            let src = render_function(&body);
            let fs = functions("gen.c", &src);
            let f = fs.first().ok_or_else(|| TestCaseError::fail("no function"))?;
            let count = |allocs: u8, frees: u8| {
                check_function(f, &set_of(&pick(&ALLOCATORS, allocs), &pick(&FREERS, frees)), &builtins).len()
            };
            let (a_big, f_big) = (a_small | a_extra, f_small | f_extra);
            let (lo, hi) = (count(a_small, f_small), count(a_big, f_small));
            if hi < lo {
                return Err(TestCaseError::fail(format!("more AllocSource: {lo} -> {hi}\n{src}")));
            }
            let more_free = count(a_small, f_big);
            if more_free > lo {
                return Err(TestCaseError::fail(format!(
                    "more FreeSink: {lo} -> {more_free}\n{src}"
                )));
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    within(start, Duration::from_secs(30), "monotonicity")?;
    Ok("1000 random bodies".into())
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_memanno"))
}

fn run_ok(cmd: &mut Command) -> Result<String, String> {
    let out = cmd.output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{cmd:?} failed: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn dir_contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut m = BTreeMap::new();
    for e in std::fs::read_dir(dir).unwrap().flatten() {
        m.insert(
            e.file_name().to_string_lossy().into_owned(),
            std::fs::read(e.path()).unwrap(),
        );
    }
    m
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = fixture("synthetic/memanno.toml");
    let runs: Vec<_> = ["one", "two"].iter().map(|n| tmp.path().join(n)).collect();
    for d in &runs {
        run_ok(
            bin()
                .arg("pipeline")
                .arg("--config")
                .arg(&config)
                .arg("--out-dir")
                .arg(d),
        )?;
    }
    let (a, b) = (dir_contents(&runs[0]), dir_contents(&runs[1]));
    if a.len() != 6 {
        return Err(format!("expected 6 output files, got {:?}", a.keys()));
    }
    if a != b {
        let diff: Vec<_> = a.keys().filter(|k| a.get(*k) != b.get(*k)).collect();
        return Err(format!("outputs differ: {diff:?}"));
    }

    let server = ChatServer::start(r#"{"allocated_variables": [], "deallocated_variables": []}"#);
    let cache = tmp.path().join("cache");
    let remote = |out: &str| {
        let mut c = bin();
        c.args(["--json", "annotate", "--backend", "remote", "--endpoint", &server.url])
            .arg("--corpus")
            .arg(fixture("synthetic/src"))
            .arg("--cache-dir")
            .arg(&cache)
            .arg("--out")
            .arg(tmp.path().join(out))
            .env("MEMANNO_API_KEY", "test-key");
        c
    };
    let first: serde_json::Value = serde_json::from_str(&run_ok(&mut remote("r1.json"))?).map_err(|e| e.to_string())?;
    let served = server.count();
    if served == 0 || first["stats"]["backend_calls"] != served {
        return Err(format!(
            "cold run: server saw {served}, client reports {}",
            first["stats"]["backend_calls"]
        ));
    }
    let second: serde_json::Value =
        serde_json::from_str(&run_ok(&mut remote("r2.json"))?).map_err(|e| e.to_string())?;
    if server.count() != served || second["stats"]["backend_calls"] != 0 {
        return Err(format!(
            "warm run made {} requests (client reports {})",
            server.count() - served,
            second["stats"]["backend_calls"]
        ));
    }
    let same = std::fs::read(tmp.path().join("r1.json")).ok() == std::fs::read(tmp.path().join("r2.json")).ok();
    if !same {
        return Err("warm-cache annotations differ from cold run".into());
    }
    Ok(format!(
        "6 pipeline files byte-identical; remote cold run {served} requests, warm run 0"
    ))
}

fn not_reproducible() -> Outcome {
    Ok(
        "not reproducible at desk scale: absolute TP/FP/FN per hosted model (needs DeepSeek-R1-70B, Codestral, \
        Qwen2.5-Coder-32B endpoints) and analyzer results on the seven real projects (needs Cooddy, CodeQL, Infer \
        and project builds); substituted by criteria 1-7"
            .into(),
    )
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("metric oracle", metric_oracle),
        ("cooddy golden file", cooddy_golden),
        ("name heuristic", name_heuristic),
        ("mock pipeline", mock_pipeline),
        ("leak flip", leak_flip),
        ("monotonicity", monotonicity),
        ("determinism and cache", determinism),
        ("scope statement", not_reproducible),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {} ({name}): PASS - {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} ({name}): FAIL - {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
