use std::collections::BTreeSet;

use super::types::{FunctionAnnotation, Kind, Provenance, Qualifiers, Slot};
use crate::ingest::lexer::{tokenize, Token};
use crate::ingest::{body_open, FunctionRecord};
use crate::llm::AllocationFindings;

fn body_tokens(f: &FunctionRecord) -> Vec<Token<'_>> {
    let toks = tokenize(&f.body);
    match body_open(&toks) {
        Some(i) => toks[i + 1..].to_vec(),
        None => Vec::new(),
    }
}

/// Identifiers returned as `return v;` or `return (v);`.
pub fn returned_identifiers(f: &FunctionRecord) -> BTreeSet<String> {
    let t = body_tokens(f);
    let mut out = BTreeSet::new();
    for i in 0..t.len() {
        if !t[i].is_ident_named("return") {
            continue;
        }
        let rest = &t[i + 1..];
        match rest {
            [v, semi, ..] if v.is_ident() && semi.is_punct(";") => {
                out.insert(v.text.to_string());
            }
            [o, v, c, semi, ..] if o.is_punct("(") && v.is_ident() && c.is_punct(")") && semi.is_punct(";") => {
                out.insert(v.text.to_string());
            }
            _ => {}
        }
    }
    out
}

/// Identifiers written through as `*p = ...` or `(*p) = ...`.
pub fn deref_assigned(f: &FunctionRecord) -> BTreeSet<String> {
    let t = body_tokens(f);
    let mut out = BTreeSet::new();
    for i in 0..t.len() {
        match &t[i..] {
            [o, star, v, c, eq, ..]
                if o.is_punct("(") && star.is_punct("*") && v.is_ident() && c.is_punct(")") && eq.is_punct("=") =>
            {
                out.insert(v.text.to_string());
            }
            [star, v, eq, ..] if star.is_punct("*") && v.is_ident() && eq.is_punct("=") => {
                let unary = i == 0 || {
                    let p = &t[i - 1];
                    [";", "{", "}", ")", ":"].iter().any(|x| p.is_punct(x)) || p.is_ident_named("else")
                };
                if unary {
                    out.insert(v.text.to_string());
                }
            }
            _ => {}
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mapped {
    pub annotation: FunctionAnnotation,
    pub diagnostics: Vec<String>,
}

/// Turn the model's variable names into slot labels.
///
/// An allocated name that is returned labels the return value; otherwise, a
/// parameter written through with `*p =` labels that parameter. A
/// deallocated name equal to a parameter labels that parameter. Everything
/// else is a local pair and produces nothing. A slot that would receive both
/// kinds gets neither.
pub fn map_findings_to_annotations(
    function: &FunctionRecord,
    findings: &AllocationFindings,
    qualifiers: &Qualifiers,
) -> Mapped {
    let returned = returned_identifiers(function);
    let deref = deref_assigned(function);
    let mut alloc: BTreeSet<Slot> = BTreeSet::new();
    let mut free: BTreeSet<Slot> = BTreeSet::new();
    for v in &findings.allocated_variables {
        if returned.contains(v) {
            alloc.insert(Slot::Return);
        } else if let Some(i) = function.param_index(v).filter(|_| deref.contains(v)) {
            alloc.insert(Slot::Param(i));
        }
    }
    for v in &findings.deallocated_variables {
        if let Some(i) = function.param_index(v) {
            free.insert(Slot::Param(i));
        }
    }
    let mut annotation = FunctionAnnotation::new(Some(function.id.clone()), Provenance::Llm, Some(function.arity()));
    let mut diagnostics = Vec::new();
    for s in alloc.union(&free) {
        match (alloc.contains(s), free.contains(s)) {
            (true, true) => diagnostics.push(format!(
                "{}: {s} reported as both allocated and deallocated; label dropped",
                function.name
            )),
            (true, false) => {
                annotation.entries.insert(*s, qualifiers.of(Kind::AllocSource));
            }
            _ => {
                annotation.entries.insert(*s, qualifiers.of(Kind::FreeSink));
            }
        }
    }
    Mapped {
        annotation,
        diagnostics,
    }
}
