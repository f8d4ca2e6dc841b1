mod common;

use common::fixture;
use std::process::{Command, Output};

fn memanno(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_memanno"))
        .args(args)
        .output()
        .expect("run binary")
}

fn path(p: &std::path::Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(memanno(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(memanno(&["score", "--predicted", "x.json"]).status.code(), Some(1));
    assert_eq!(memanno(&["--version"]).status.code(), Some(0));
}

#[test]
fn missing_corpus_exits_2() {
    let out = memanno(&["dump-corpus", "--corpus", "/definitely/not/here"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/definitely/not/here"));
}

#[test]
fn missing_credential_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_memanno"))
        .args([
            "annotate",
            "--backend",
            "remote",
            "--endpoint",
            "http://127.0.0.1:9/v1",
            "--api-key-env",
            "MEMANNO_TEST_UNSET_KEY",
        ])
        .args([
            "--corpus",
            path(&fixture("synthetic/src")),
            "--out",
            path(&tmp.path().join("a.json")),
        ])
        .env_remove("MEMANNO_TEST_UNSET_KEY")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("MEMANNO_TEST_UNSET_KEY"));
}

#[test]
fn bad_output_path_fails_before_work() {
    let out = memanno(&[
        "annotate",
        "--config",
        path(&fixture("synthetic/memanno.toml")),
        "--out",
        "/no/such/dir/a.json",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("/no/such/dir"), "{err}");
    assert!(!err.contains("warning"), "model was queried: {err}");
}

#[test]
fn secret_in_config_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    std::fs::write(&cfg, "[backend]\nkind = \"remote\"\napi_key = \"sk-123\"\n").unwrap();
    let out = memanno(&[
        "dump-corpus",
        "--config",
        path(&cfg),
        "--corpus",
        path(&fixture("callgraph")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("secrets"));
}

#[test]
fn empty_corpus_pipeline_is_all_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("empty");
    std::fs::create_dir(&corpus).unwrap();
    let out = memanno(&[
        "--json",
        "pipeline",
        "--corpus",
        path(&corpus),
        "--backend",
        "mock",
        "--fixtures",
        path(&fixture("synthetic/mock_llm.json")),
        "--out-dir",
        path(&tmp.path().join("out")),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["summary"]["functions"], 0);
    assert_eq!(v["summary"]["warnings_with"], 0);
    assert_eq!(
        std::fs::read_to_string(tmp.path().join("out/cooddy.json")).unwrap(),
        "{}\n"
    );
}

#[test]
fn pipeline_then_emit_score_intersect() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("run");
    let out = memanno(&[
        "pipeline",
        "--config",
        path(&fixture("synthetic/memanno.toml")),
        "--out-dir",
        path(&dir),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("without 1  with 2"), "{text}");
    assert!(text.contains("run_job label"), "{text}");

    let ann = dir.join("annotations.json");
    let emitted = memanno(&["emit", "--format", "cooddy", "--in", path(&ann)]);
    assert_eq!(emitted.stdout, std::fs::read(dir.join("cooddy.json")).unwrap());

    let tsv = memanno(&["emit", "--format", "codeql", "--in", path(&ann)]);
    let tsv = String::from_utf8_lossy(&tsv.stdout);
    assert!(tsv.contains("pool_create\tReturnValue\tallocation"));
    assert!(!tsv.contains("my_free\t"));

    let score = memanno(&[
        "--json",
        "score",
        "--predicted",
        path(&ann),
        "--ground-truth",
        path(&ann),
    ]);
    let v: serde_json::Value = serde_json::from_slice(&score.stdout).unwrap();
    assert_eq!(
        (v["tp"].as_u64(), v["fp"].as_u64(), v["fn"].as_u64()),
        (Some(3), Some(0), Some(0))
    );

    let heur = tmp.path().join("h.json");
    let h = memanno(&[
        "annotate",
        "--annotator",
        "heuristic",
        "--corpus",
        path(&fixture("synthetic/src")),
        "--out",
        path(&heur),
    ]);
    assert!(h.status.success());
    let inter = memanno(&["--json", "intersect", path(&ann), path(&heur)]);
    let v: serde_json::Value = serde_json::from_slice(&inter.stdout).unwrap();
    assert_eq!(v["both"], 0);
    assert_eq!(v["only_b"][0], "xmalloc");
}

#[test]
fn check_with_and_without() {
    let corpus = fixture("libsolv");
    let none = memanno(&["--json", "check", "--corpus", path(&corpus), "--annotations", "none"]);
    let v: serde_json::Value = serde_json::from_slice(&none.stdout).unwrap();
    assert_eq!(v["total"], 0);
    assert_eq!(v["annotations"], "none");
    let with = memanno(&[
        "--json",
        "check",
        "--corpus",
        path(&corpus),
        "--annotations",
        path(&fixture("libsolv/annotations.json")),
    ]);
    let v: serde_json::Value = serde_json::from_slice(&with.stdout).unwrap();
    assert_eq!(v["never_freed"], 1);
    assert_eq!(v["warnings"][0]["variable"], "leadsigchksumh");
}
