use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::ptr;

use memanno_ffi::*;

fn fixture(rel: &str) -> CString {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(rel);
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    let p = memanno_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

unsafe fn take(s: *mut std::ffi::c_char) -> String {
    let out = CStr::from_ptr(s).to_string_lossy().into_owned();
    memanno_string_free(s);
    out
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(memanno_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn corpus_check_and_emit() {
    unsafe {
        let mut corpus = ptr::null_mut();
        assert_eq!(
            memanno_corpus_scan(fixture("libsolv").as_ptr(), &mut corpus),
            MemannoStatus::Ok
        );
        assert_eq!(memanno_corpus_function_count(corpus), 1);

        let mut set = ptr::null_mut();
        let path = fixture("libsolv/annotations.json");
        assert_eq!(memanno_annotations_load(path.as_ptr(), &mut set), MemannoStatus::Ok);
        assert_eq!(memanno_annotations_len(set), 2);

        let mut total = 99usize;
        assert_eq!(
            memanno_check(corpus, ptr::null(), ptr::null_mut(), &mut total),
            MemannoStatus::Ok
        );
        assert_eq!(total, 0);
        let mut report = ptr::null_mut();
        assert_eq!(memanno_check(corpus, set, &mut report, &mut total), MemannoStatus::Ok);
        assert_eq!(total, 1);
        assert!(take(report).contains("leadsigchksumh"));

        let mut json = ptr::null_mut();
        assert_eq!(memanno_emit_cooddy(set, corpus, &mut json), MemannoStatus::Ok);
        assert!(take(json).contains("\"solv_chksum_create(solv_chksum_create)\""));

        let mut tsv = ptr::null_mut();
        let mut dropped = 0usize;
        assert_eq!(memanno_emit_codeql(set, &mut tsv, &mut dropped), MemannoStatus::Ok);
        assert_eq!(dropped, 1);
        assert!(take(tsv).contains("solv_chksum_create\tReturnValue\tallocation"));

        memanno_annotations_free(set);
        memanno_corpus_free(corpus);
    }
}

#[test]
fn score_and_heuristic() {
    unsafe {
        let mut corpus = ptr::null_mut();
        assert_eq!(
            memanno_corpus_scan(fixture("synthetic/src").as_ptr(), &mut corpus),
            MemannoStatus::Ok
        );
        let mut heur = ptr::null_mut();
        assert_eq!(memanno_annotations_heuristic(corpus, &mut heur), MemannoStatus::Ok);
        assert_eq!(memanno_annotations_len(heur), 1);

        let mut s = MemannoScore::default();
        assert_eq!(memanno_score(heur, heur, false, &mut s), MemannoStatus::Ok);
        assert_eq!((s.tp, s.fp, s.fn_), (1, 0, 0));
        assert_eq!(s.precision, 1.0);

        let empty = CString::new(r#"{"metadata": {"generator": "t"}, "functions": {}}"#).unwrap();
        let mut none = ptr::null_mut();
        assert_eq!(
            memanno_annotations_from_json(empty.as_ptr(), &mut none),
            MemannoStatus::Ok
        );
        assert_eq!(memanno_score(none, none, false, &mut s), MemannoStatus::Ok);
        assert!(s.precision.is_nan() && s.recall.is_nan());

        memanno_annotations_free(none);
        memanno_annotations_free(heur);
        memanno_corpus_free(corpus);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut corpus = ptr::null_mut();
        assert_eq!(
            memanno_corpus_scan(ptr::null(), &mut corpus),
            MemannoStatus::NullArgument
        );
        assert!(last_error().contains("root"));
        let missing = CString::new("/no/such/corpus").unwrap();
        assert_eq!(
            memanno_corpus_scan(missing.as_ptr(), &mut corpus),
            MemannoStatus::Corpus
        );
        assert!(corpus.is_null());
        assert!(last_error().contains("/no/such/corpus"));

        let bad = CString::new("{not json").unwrap();
        let mut set = ptr::null_mut();
        assert_eq!(
            memanno_annotations_from_json(bad.as_ptr(), &mut set),
            MemannoStatus::Parse
        );
        let invalid = [0xffu8, 0];
        assert_eq!(
            memanno_annotations_from_json(invalid.as_ptr().cast(), &mut set),
            MemannoStatus::InvalidUtf8
        );
        let file = CString::new("/no/such/file.json").unwrap();
        assert_eq!(memanno_annotations_load(file.as_ptr(), &mut set), MemannoStatus::Io);

        // a successful call clears the message
        assert_eq!(
            memanno_corpus_scan(fixture("callgraph").as_ptr(), &mut corpus),
            MemannoStatus::Ok
        );
        assert!(memanno_last_error().is_null());
        memanno_corpus_free(corpus);

        memanno_corpus_free(ptr::null_mut());
        memanno_annotations_free(ptr::null_mut());
        memanno_string_free(ptr::null_mut());
        assert_eq!(memanno_annotations_len(ptr::null()), 0);
    }
}

#[test]
fn header_declares_every_export() {
    let h = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/memanno.h")).unwrap();
    let src = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|r| r.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 14);
    for e in exports {
        assert!(h.contains(&format!("{e}(")), "{e} missing from header");
    }
    assert!(h.contains("typedef struct MemannoCorpus MemannoCorpus;"));
}

#[test]
fn header_compiles_as_c() {
    let Ok(cc) = which_cc() else { return };
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let tmp = std::env::temp_dir().join(format!("memanno_hdr_{}.c", std::process::id()));
    std::fs::write(
        &tmp,
        "#include \"memanno.h\"\nint main(void) { return memanno_version() == 0; }\n",
    )
    .unwrap();
    let status = std::process::Command::new(cc)
        .args(["-fsyntax-only", "-Wall", "-Werror", "-I"])
        .arg(&dir)
        .arg(&tmp)
        .status()
        .unwrap();
    let _ = std::fs::remove_file(&tmp);
    assert!(status.success());
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| {
            std::process::Command::new(c)
                .arg("--version")
                .output()
                .is_ok_and(|o| o.status.success())
        })
        .ok_or(())
}
