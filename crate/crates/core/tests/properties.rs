mod common;

use std::collections::BTreeMap;

use common::*;
use memanno::annotate::{AnnotationSet, FunctionAnnotation, Kind, Metadata, Provenance, Slot};
use memanno::emit::{emit_cooddy, parse_cooddy};
use memanno::leakcheck::{check_function, Builtins};
use proptest::prelude::*;
use proptest::strategy::ValueTree;

fn arb_set() -> impl Strategy<Value = AnnotationSet> {
    let entry = (
        0usize..4,
        prop_oneof![Just(Kind::AllocSource), Just(Kind::FreeSink)],
        1u32..5,
    );
    let func = (0usize..4, proptest::collection::btree_map(0usize..4, entry, 0..4));
    proptest::collection::btree_map("[a-z_][a-z0-9_]{0,8}", func, 0..12).prop_map(|m| {
        let mut s = AnnotationSet::new(Metadata::default());
        for (name, (extra, slots)) in m {
            let arity = slots.keys().max().copied().unwrap_or(0) + extra;
            let mut a = FunctionAnnotation::new(None, Provenance::Manual, Some(arity));
            for (i, (_, kind, q)) in slots {
                let slot = if i == 0 { Slot::Return } else { Slot::Param(i) };
                a.entries
                    .insert(slot, memanno::annotate::AnnotationKind { kind, qualifier: q });
            }
            s.insert(name, a);
        }
        s
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn cooddy_round_trip(set in arb_set()) {
        let text = emit_cooddy(&set, &BTreeMap::new()).unwrap();
        let back = parse_cooddy(&text).unwrap();
        prop_assert_eq!(back.len(), set.len());
        for (name, a) in set.iter() {
            let f = &back[name];
            prop_assert_eq!(Some(f.arity), a.arity);
            prop_assert_eq!(&f.entries, &a.entries);
        }
        prop_assert_eq!(emit_cooddy(&set, &BTreeMap::new()).unwrap(), text);
    }

    #[test]
    fn annotation_json_round_trip(set in arb_set()) {
        let text = set.to_json();
        let back = AnnotationSet::from_json(&text).unwrap();
        prop_assert_eq!(back.to_json(), text);
    }

    #[test]
    fn warnings_monotone(body in body(), a in 0u8..16, a2 in 0u8..16, f in 0u8..8, f2 in 0u8..8) {
        let src = render_function(&body);
        let fs = functions("gen.c", &src);
        let func = &fs[0];
        let b = Builtins::stock();
        let n = |al: u8, fr: u8| check_function(func, &set_of(&pick(&ALLOCATORS, al), &pick(&FREERS, fr)), &b).len();
        prop_assert!(n(a | a2, f) >= n(a, f), "{}", src);
        prop_assert!(n(a, f | f2) <= n(a, f), "{}", src);
    }
}

#[test]
fn generated_bodies_parse_and_warn() {
    // The generator must exercise the checker, not just produce silence.
    let mut runner = proptest::test_runner::TestRunner::deterministic();
    let b = Builtins::stock();
    let mut warned = 0;
    for _ in 0..200 {
        let body = body().new_tree(&mut runner).unwrap().current();
        let fs = functions("gen.c", &render_function(&body));
        assert_eq!(fs.len(), 1);
        if !check_function(&fs[0], &set_of(&ALLOCATORS, &[]), &b).is_empty() {
            warned += 1;
        }
    }
    assert!(warned > 20, "only {warned} of 200 bodies produce warnings");
}
