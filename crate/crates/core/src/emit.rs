//! Analyzer-facing serializations of an annotation set.

use serde::Serialize;
use std::collections::BTreeMap;

use crate::annotate::{AnnotationKind, AnnotationSet, Kind, Slot};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EmitError {
    #[error("no known arity for: {}", .0.join(", "))]
    UnknownArity(Vec<String>),
    #[error("{name}: slot {slot} exceeds arity {arity}")]
    SlotOutOfRange { name: String, slot: Slot, arity: usize },
    #[error("invalid Cooddy document: {0}")]
    Parse(String),
}

/// `name(name)`, the key form for unmangled C functions.
pub fn cooddy_key(name: &str) -> String {
    format!("{name}({name})")
}

/// Cooddy annotation JSON.
///
/// One array per function: element 0 lists the return value annotations,
/// element i the annotations of parameter i. Arity comes from `arities`,
/// falling back to the arity recorded in the set.
pub fn emit_cooddy(set: &AnnotationSet, arities: &BTreeMap<String, usize>) -> Result<String, EmitError> {
    let mut unknown = Vec::new();
    let mut doc: BTreeMap<String, Vec<Vec<String>>> = BTreeMap::new();
    for (name, a) in set.iter() {
        let Some(arity) = arities.get(name).copied().or(a.arity) else {
            unknown.push(name.clone());
            continue;
        };
        let mut slots = vec![Vec::new(); arity + 1];
        for (slot, k) in &a.entries {
            let i = match *slot {
                Slot::Return => 0,
                Slot::Param(i) => i,
            };
            if i > arity {
                return Err(EmitError::SlotOutOfRange {
                    name: name.clone(),
                    slot: *slot,
                    arity,
                });
            }
            slots[i].push(format!("{}::{}", k.kind.as_str(), k.qualifier));
        }
        doc.insert(cooddy_key(name), slots);
    }
    if !unknown.is_empty() {
        return Err(EmitError::UnknownArity(unknown));
    }
    let mut s = serde_json::to_string_pretty(&doc).expect("document serializes");
    s.push('\n');
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CooddyFunction {
    pub arity: usize,
    pub entries: BTreeMap<Slot, AnnotationKind>,
}

fn parse_annotation(s: &str) -> Option<AnnotationKind> {
    let (kind, q) = s.split_once("::")?;
    let kind = match kind {
        "AllocSource" => Kind::AllocSource,
        "FreeSink" => Kind::FreeSink,
        _ => return None,
    };
    let qualifier: u32 = q.parse().ok().filter(|q| *q >= 1)?;
    Some(AnnotationKind { kind, qualifier })
}

/// Read back a document written by `emit_cooddy`, keyed by function name.
pub fn parse_cooddy(text: &str) -> Result<BTreeMap<String, CooddyFunction>, EmitError> {
    let doc: BTreeMap<String, Vec<Vec<String>>> =
        serde_json::from_str(text).map_err(|e| EmitError::Parse(e.to_string()))?;
    let mut out = BTreeMap::new();
    for (key, slots) in doc {
        let name = key
            .strip_suffix(')')
            .and_then(|k| k.split_once('('))
            .filter(|(a, b)| a == b && !a.is_empty())
            .map(|(a, _)| a.to_string())
            .ok_or_else(|| EmitError::Parse(format!("key '{key}' is not of the form name(name)")))?;
        if slots.is_empty() {
            return Err(EmitError::Parse(format!("{key}: empty position array")));
        }
        let mut entries = BTreeMap::new();
        for (i, list) in slots.iter().enumerate() {
            if list.len() > 1 {
                return Err(EmitError::Parse(format!("{key}: position {i} has several annotations")));
            }
            if let Some(s) = list.first() {
                let k = parse_annotation(s).ok_or_else(|| EmitError::Parse(format!("{key}: bad annotation '{s}'")))?;
                let slot = if i == 0 { Slot::Return } else { Slot::Param(i) };
                entries.insert(slot, k);
            }
        }
        out.insert(
            name,
            CooddyFunction {
                arity: slots.len() - 1,
                entries,
            },
        );
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModelRow {
    pub function: String,
    pub position: &'static str,
    pub kind: &'static str,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CodeqlModels {
    pub rows: Vec<ModelRow>,
    /// Entries left out because they are not a return-value AllocSource.
    pub dropped: usize,
    pub text: String,
}

pub const CODEQL_EXTENSION_POINT: &str = "semmle.code.cpp.models.interfaces.Allocation";

/// Allocation model table: one tab-separated row per function whose return
/// value is an AllocSource. All other entries are dropped and counted.
pub fn emit_codeql_models(set: &AnnotationSet) -> CodeqlModels {
    let mut rows = Vec::new();
    let mut dropped = 0;
    for (name, a) in set.iter() {
        for (slot, k) in &a.entries {
            if *slot == Slot::Return && k.kind == Kind::AllocSource {
                rows.push(ModelRow {
                    function: name.clone(),
                    position: "ReturnValue",
                    kind: "allocation",
                });
            } else {
                dropped += 1;
            }
        }
    }
    let mut text = String::new();
    text.push_str("# memanno allocation models\n");
    text.push_str(&format!("# extension point: {CODEQL_EXTENSION_POINT}\n"));
    text.push_str("# columns: function\tposition\tkind\n");
    text.push_str(&format!("# rows: {}  dropped entries: {dropped}\n", rows.len()));
    for r in &rows {
        text.push_str(&format!("{}\t{}\t{}\n", r.function, r.position, r.kind));
    }
    CodeqlModels { rows, dropped, text }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotate::{FunctionAnnotation, Metadata, Provenance, Qualifiers};

    type Item<'a> = (&'a str, usize, &'a [(Slot, Kind)]);

    fn set(items: &[Item]) -> AnnotationSet {
        let mut s = AnnotationSet::new(Metadata::default());
        for (name, arity, entries) in items {
            let mut a = FunctionAnnotation::new(None, Provenance::Manual, Some(*arity));
            for (slot, kind) in *entries {
                a.entries.insert(*slot, Qualifiers::default().of(*kind));
            }
            s.insert(*name, a);
        }
        s
    }

    #[test]
    fn free_sink_on_first_param() {
        let s = set(&[("my_free", 1, &[(Slot::Param(1), Kind::FreeSink)])]);
        let out = emit_cooddy(&s, &BTreeMap::new()).unwrap();
        assert_eq!(
            out,
            "{\n  \"my_free(my_free)\": [\n    [],\n    [\n      \"FreeSink::3\"\n    ]\n  ]\n}\n"
        );
    }

    #[test]
    fn empty_set_is_empty_object() {
        assert_eq!(
            emit_cooddy(&AnnotationSet::default(), &BTreeMap::new()).unwrap(),
            "{}\n"
        );
    }

    #[test]
    fn unknown_arity_lists_names() {
        let mut s = AnnotationSet::default();
        for n in ["a", "b"] {
            let mut f = FunctionAnnotation::new(None, Provenance::Manual, None);
            f.entries
                .insert(Slot::Return, Qualifiers::default().of(Kind::AllocSource));
            s.insert(n, f);
        }
        let arities = BTreeMap::from([("b".to_string(), 0)]);
        assert_eq!(
            emit_cooddy(&s, &arities),
            Err(EmitError::UnknownArity(vec!["a".into()]))
        );
    }

    #[test]
    fn codeql_filter() {
        let s = set(&[
            ("a", 0, &[(Slot::Return, Kind::AllocSource)]),
            ("b", 1, &[(Slot::Return, Kind::AllocSource)]),
            ("c", 1, &[(Slot::Return, Kind::AllocSource)]),
            ("d", 1, &[(Slot::Param(1), Kind::AllocSource)]),
            ("e", 2, &[(Slot::Param(2), Kind::AllocSource)]),
        ]);
        let m = emit_codeql_models(&s);
        assert_eq!(m.rows.len(), 3);
        assert_eq!(m.dropped, 2);
        assert!(m
            .text
            .ends_with("a\tReturnValue\tallocation\nb\tReturnValue\tallocation\nc\tReturnValue\tallocation\n"));
        let empty = emit_codeql_models(&AnnotationSet::default());
        assert!(empty.text.lines().all(|l| l.starts_with('#')));
    }

    #[test]
    fn parse_rejects_malformed() {
        assert!(parse_cooddy("{\"f(g)\": [[]]}").is_err());
        assert!(parse_cooddy("{\"f(f)\": []}").is_err());
        assert!(parse_cooddy("{\"f(f)\": [[\"Leak::1\"]]}").is_err());
        assert!(parse_cooddy("{\"f(f)\": [[\"AllocSource::x\"]]}").is_err());
    }
}
