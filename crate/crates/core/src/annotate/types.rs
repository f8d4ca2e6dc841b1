use serde::de::{self, Deserializer, MapAccess, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use std::collections::BTreeMap;
use std::fmt;

use crate::ingest::FunctionId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Kind {
    AllocSource,
    FreeSink,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::AllocSource => "AllocSource",
            Kind::FreeSink => "FreeSink",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AnnotationKind {
    pub kind: Kind,
    pub qualifier: u32,
}

/// Qualifier integers written after `::`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Qualifiers {
    pub alloc: u32,
    pub free: u32,
}

impl Default for Qualifiers {
    fn default() -> Self {
        Qualifiers { alloc: 1, free: 3 }
    }
}

impl Qualifiers {
    pub fn of(&self, kind: Kind) -> AnnotationKind {
        let qualifier = match kind {
            Kind::AllocSource => self.alloc,
            Kind::FreeSink => self.free,
        };
        AnnotationKind { kind, qualifier }
    }
}

/// Return value, or a 1-based parameter position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Slot {
    Return,
    Param(usize),
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slot::Return => f.write_str("return"),
            Slot::Param(i) => write!(f, "param:{i}"),
        }
    }
}

impl std::str::FromStr for Slot {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s == "return" {
            return Ok(Slot::Return);
        }
        match s.strip_prefix("param:").and_then(|n| n.parse::<usize>().ok()) {
            Some(i) if i >= 1 => Ok(Slot::Param(i)),
            _ => Err(format!(
                "invalid slot '{s}' (expected \"return\" or \"param:N\", N >= 1)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Provenance {
    #[serde(rename = "LLM")]
    Llm,
    #[serde(rename = "LLMPostFiltered")]
    LlmPostFiltered,
    NameHeuristic,
    Manual,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryRepr {
    slot: String,
    kind: Kind,
    qualifier: u32,
}

/// Labels of one function. At most one kind per slot by construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionAnnotation {
    pub function_id: Option<FunctionId>,
    pub entries: BTreeMap<Slot, AnnotationKind>,
    pub provenance: Provenance,
    /// Parameter count when known; bounds the `Param` slots.
    pub arity: Option<usize>,
}

impl FunctionAnnotation {
    pub fn new(function_id: Option<FunctionId>, provenance: Provenance, arity: Option<usize>) -> Self {
        FunctionAnnotation {
            function_id,
            entries: BTreeMap::new(),
            provenance,
            arity,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn has(&self, kind: Kind) -> bool {
        self.entries.values().any(|k| k.kind == kind)
    }

    pub fn has_return_alloc(&self) -> bool {
        self.entries
            .get(&Slot::Return)
            .is_some_and(|k| k.kind == Kind::AllocSource)
    }

    /// (allocates?, deallocates?)
    pub fn profile(&self) -> (bool, bool) {
        (self.has(Kind::AllocSource), self.has(Kind::FreeSink))
    }

    pub fn kind_at(&self, slot: Slot) -> Option<Kind> {
        self.entries.get(&slot).map(|k| k.kind)
    }

    fn check_arity(&self) -> Result<(), String> {
        if let Some(a) = self.arity {
            for s in self.entries.keys() {
                if let Slot::Param(i) = s {
                    if *i > a {
                        return Err(format!("slot {s} exceeds arity {a}"));
                    }
                }
            }
        }
        Ok(())
    }
}

impl Serialize for FunctionAnnotation {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            entries: Vec<EntryRepr>,
            provenance: Provenance,
            #[serde(skip_serializing_if = "Option::is_none")]
            arity: Option<usize>,
            #[serde(skip_serializing_if = "Option::is_none")]
            id: Option<&'a FunctionId>,
        }
        Repr {
            entries: self
                .entries
                .iter()
                .map(|(slot, k)| EntryRepr {
                    slot: slot.to_string(),
                    kind: k.kind,
                    qualifier: k.qualifier,
                })
                .collect(),
            provenance: self.provenance,
            arity: self.arity,
            id: self.function_id.as_ref(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FunctionAnnotation {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Repr {
            entries: Vec<EntryRepr>,
            provenance: Provenance,
            #[serde(default)]
            arity: Option<usize>,
            #[serde(default)]
            id: Option<FunctionId>,
        }
        let r = Repr::deserialize(d)?;
        let mut fa = FunctionAnnotation::new(r.id, r.provenance, r.arity);
        for e in r.entries {
            let slot: Slot = e.slot.parse().map_err(de::Error::custom)?;
            if e.qualifier == 0 {
                return Err(de::Error::custom(format!("slot {slot}: qualifier must be >= 1")));
            }
            let k = AnnotationKind {
                kind: e.kind,
                qualifier: e.qualifier,
            };
            if fa.entries.insert(slot, k).is_some() {
                return Err(de::Error::custom(format!("slot {slot} is labelled twice")));
            }
        }
        fa.check_arity().map_err(de::Error::custom)?;
        Ok(fa)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metadata {
    pub generator: String,
    #[serde(default)]
    pub model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

/// Annotations keyed by function name. Functions without entries are absent.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationSet {
    pub metadata: Metadata,
    #[serde(deserialize_with = "unique_map")]
    functions: BTreeMap<String, FunctionAnnotation>,
}

fn unique_map<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, FunctionAnnotation>, D::Error> {
    struct V;
    impl<'de> Visitor<'de> for V {
        type Value = BTreeMap<String, FunctionAnnotation>;
        fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            f.write_str("a map of function name to annotation")
        }
        fn visit_map<A: MapAccess<'de>>(self, mut m: A) -> Result<Self::Value, A::Error> {
            let mut out = BTreeMap::new();
            while let Some((k, v)) = m.next_entry::<String, FunctionAnnotation>()? {
                if out.contains_key(&k) {
                    return Err(de::Error::custom(format!("duplicate function name '{k}'")));
                }
                let v: FunctionAnnotation = v;
                if !v.is_empty() {
                    out.insert(k, v);
                }
            }
            Ok(out)
        }
    }
    d.deserialize_map(V)
}

#[derive(Debug, thiserror::Error)]
pub enum SetError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("invalid annotation file {path}: {message}")]
    Schema { path: String, message: String },
}

impl AnnotationSet {
    pub fn new(metadata: Metadata) -> Self {
        AnnotationSet {
            metadata,
            functions: BTreeMap::new(),
        }
    }

    /// Store `a` under `name`. Empty annotations are not stored. Returns
    /// false, leaving the set unchanged, when `name` is already present.
    pub fn insert(&mut self, name: impl Into<String>, a: FunctionAnnotation) -> bool {
        let name = name.into();
        if self.functions.contains_key(&name) {
            return false;
        }
        if !a.is_empty() {
            self.functions.insert(name, a);
        }
        true
    }

    pub fn remove(&mut self, name: &str) -> Option<FunctionAnnotation> {
        self.functions.remove(name)
    }

    pub fn get(&self, name: &str) -> Option<&FunctionAnnotation> {
        self.functions.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.functions.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &FunctionAnnotation)> {
        self.functions.iter()
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.functions.keys()
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn count(&self, kind: Kind) -> usize {
        self.functions.values().filter(|a| a.has(kind)).count()
    }

    pub fn return_alloc_count(&self) -> usize {
        self.functions.values().filter(|a| a.has_return_alloc()).count()
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, SetError> {
        let text = std::fs::read_to_string(path).map_err(|e| SetError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_json(&text).map_err(|e| SetError::Schema {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    /// Pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("annotation set serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> AnnotationSet {
        let mut s = AnnotationSet::new(Metadata {
            generator: "test".into(),
            model: Some("m".into()),
            timestamp: None,
        });
        let mut a = FunctionAnnotation::new(Some(FunctionId("a.c:mk:1".into())), Provenance::Llm, Some(2));
        a.entries
            .insert(Slot::Return, Qualifiers::default().of(Kind::AllocSource));
        a.entries
            .insert(Slot::Param(2), Qualifiers::default().of(Kind::FreeSink));
        s.insert("mk", a);
        s
    }

    #[test]
    fn json_roundtrip() {
        let s = sample();
        let j = s.to_json();
        assert!(j.contains("\"slot\": \"param:2\""));
        assert!(j.contains("\"provenance\": \"LLM\""));
        assert_eq!(AnnotationSet::from_json(&j).unwrap(), s);
    }

    #[test]
    fn rejects_bad_documents() {
        let dup = r#"{"metadata":{"generator":"x"},"functions":{
            "f":{"entries":[{"slot":"return","kind":"AllocSource","qualifier":1}],"provenance":"Manual"},
            "f":{"entries":[{"slot":"return","kind":"AllocSource","qualifier":1}],"provenance":"Manual"}}}"#;
        assert!(AnnotationSet::from_json(dup)
            .unwrap_err()
            .to_string()
            .contains("duplicate"));
        let twice = r#"{"metadata":{"generator":"x"},"functions":{"f":{"entries":[
            {"slot":"return","kind":"AllocSource","qualifier":1},
            {"slot":"return","kind":"FreeSink","qualifier":3}],"provenance":"Manual"}}}"#;
        assert!(AnnotationSet::from_json(twice).is_err());
        let arity = r#"{"metadata":{"generator":"x"},"functions":{"f":{"entries":[
            {"slot":"param:3","kind":"FreeSink","qualifier":3}],"provenance":"Manual","arity":2}}}"#;
        assert!(AnnotationSet::from_json(arity).is_err());
        let zero = r#"{"metadata":{"generator":"x"},"functions":{"f":{"entries":[
            {"slot":"param:0","kind":"FreeSink","qualifier":3}],"provenance":"Manual"}}}"#;
        assert!(AnnotationSet::from_json(zero).is_err());
    }

    #[test]
    fn empty_entries_are_not_stored() {
        let mut s = AnnotationSet::default();
        assert!(s.insert("f", FunctionAnnotation::new(None, Provenance::Llm, None)));
        assert!(s.is_empty());
        let j = r#"{"metadata":{"generator":"x"},"functions":{"f":{"entries":[],"provenance":"Manual"}}}"#;
        assert!(AnnotationSet::from_json(j).unwrap().is_empty());
    }
}
