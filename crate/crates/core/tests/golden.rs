mod common;

use common::fixture;
use memanno::annotate::AnnotationSet;
use memanno::emit::emit_cooddy;
use memanno::ingest::{Corpus, ScanOptions};

#[test]
fn libsolv_annotations_match_golden() {
    let set = AnnotationSet::load(&fixture("libsolv/annotations.json")).unwrap();
    let mut one = AnnotationSet::new(set.metadata.clone());
    one.insert("solv_chksum_create", set.get("solv_chksum_create").unwrap().clone());
    let corpus = Corpus::load(&fixture("libsolv"), &ScanOptions::default()).unwrap();
    let out = emit_cooddy(&one, &corpus.arities()).unwrap();
    assert_eq!(
        out,
        std::fs::read_to_string(fixture("golden/solv_chksum_create.cooddy.json")).unwrap()
    );
}

#[test]
fn free_sink_second_slot() {
    let set = AnnotationSet::load(&fixture("libsolv/annotations.json")).unwrap();
    let out = emit_cooddy(&set, &Default::default()).unwrap();
    assert!(
        out.contains(
            "\"solv_chksum_free(solv_chksum_free)\": [\n    [],\n    [\n      \"FreeSink::3\"\n    ],\n    []\n  ]"
        ),
        "{out}"
    );
}
