//! Scoring against labelled ground truth, and set overlap.

use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::annotate::{AnnotationSet, FunctionAnnotation, Kind, Provenance, SetError, Slot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Outcome {
    TP,
    FP,
    FN,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    /// None when nothing was predicted.
    pub precision: Option<f64>,
    /// None when ground truth and predictions give nothing to recall.
    pub recall: Option<f64>,
    pub total_annotated: usize,
    pub strict_slots: bool,
    pub per_function: BTreeMap<String, Outcome>,
}

fn ratio(a: usize, b: usize) -> Option<f64> {
    (b > 0).then(|| a as f64 / b as f64)
}

impl EvaluationReport {
    /// Metrics for raw counts, without per-function detail.
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        EvaluationReport {
            tp,
            fp,
            fn_,
            precision: ratio(tp, tp + fp),
            recall: ratio(tp, tp + fn_),
            total_annotated: tp + fp,
            strict_slots: false,
            per_function: BTreeMap::new(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_table(&self) -> String {
        let m = |v: Option<f64>| v.map_or("undefined".to_string(), |x| format!("{x:.3}"));
        let mut s = String::new();
        s.push_str("TP\tFP\tFN\tPrec\tRec\t#\n");
        s.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            self.tp,
            self.fp,
            self.fn_,
            m(self.precision),
            m(self.recall),
            self.total_annotated
        ));
        s
    }
}

fn slot_profile(a: &FunctionAnnotation) -> BTreeSet<(Slot, Kind)> {
    a.entries.iter().map(|(s, k)| (*s, k.kind)).collect()
}

/// Score `predicted` against `ground_truth` over the union of their names.
///
/// A prediction is a TP when its (allocates, deallocates) profile equals the
/// label, and an FP otherwise or when the function has no label. A labelled
/// function without prediction is an FN. With `strict_slots` the profile is
/// the full set of (slot, kind) pairs.
pub fn score(predicted: &AnnotationSet, ground_truth: &AnnotationSet, strict_slots: bool) -> EvaluationReport {
    let names: BTreeSet<&String> = predicted.names().chain(ground_truth.names()).collect();
    let mut per_function = BTreeMap::new();
    for name in names {
        let outcome = match (predicted.get(name), ground_truth.get(name)) {
            (Some(p), Some(g)) => {
                let same = if strict_slots {
                    slot_profile(p) == slot_profile(g)
                } else {
                    p.profile() == g.profile()
                };
                if same {
                    Outcome::TP
                } else {
                    Outcome::FP
                }
            }
            (Some(_), None) => Outcome::FP,
            (None, Some(_)) => Outcome::FN,
            (None, None) => continue,
        };
        per_function.insert(name.clone(), outcome);
    }
    let count = |o| per_function.values().filter(|v| **v == o).count();
    let mut r = EvaluationReport::from_counts(count(Outcome::TP), count(Outcome::FP), count(Outcome::FN));
    r.strict_slots = strict_slots;
    r.per_function = per_function;
    r
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IntersectionReport {
    pub a: usize,
    pub b: usize,
    pub both: usize,
    pub members: Vec<String>,
    pub only_a: Vec<String>,
    pub only_b: Vec<String>,
}

impl IntersectionReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_table(&self, a_label: &str, b_label: &str) -> String {
        let mut s = format!("{a_label}\t{b_label}\tboth\n{}\t{}\t{}\n", self.a, self.b, self.both);
        if !self.members.is_empty() {
            s.push_str(&format!("in both: {}\n", self.members.join(", ")));
        }
        s
    }
}

/// Name-level overlap; kinds are ignored.
pub fn intersect(a: &AnnotationSet, b: &AnnotationSet) -> IntersectionReport {
    let an: BTreeSet<&String> = a.names().collect();
    let bn: BTreeSet<&String> = b.names().collect();
    let members: Vec<String> = an.intersection(&bn).map(|s| s.to_string()).collect();
    IntersectionReport {
        a: an.len(),
        b: bn.len(),
        both: members.len(),
        members,
        only_a: an.difference(&bn).map(|s| s.to_string()).collect(),
        only_b: bn.difference(&an).map(|s| s.to_string()).collect(),
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GroundTruthError {
    #[error(transparent)]
    Set(#[from] SetError),
    #[error("{0}: labelled both AllocSource and FreeSink")]
    BothKinds(String),
}

/// Load a label file. Every function must carry a single kind.
pub fn ground_truth_from_set(mut set: AnnotationSet) -> Result<AnnotationSet, GroundTruthError> {
    if let Some((name, _)) = set
        .iter()
        .find(|(_, a)| a.has(Kind::AllocSource) && a.has(Kind::FreeSink))
    {
        return Err(GroundTruthError::BothKinds(name.clone()));
    }
    let names: Vec<String> = set.names().cloned().collect();
    let mut out = AnnotationSet::new(set.metadata.clone());
    for n in names {
        let mut a = set.remove(&n).expect("name listed");
        a.provenance = Provenance::Manual;
        out.insert(n, a);
    }
    Ok(out)
}

pub fn load_ground_truth(path: &Path) -> Result<AnnotationSet, GroundTruthError> {
    ground_truth_from_set(AnnotationSet::load(path)?)
}
