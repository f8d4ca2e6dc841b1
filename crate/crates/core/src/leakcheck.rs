//! Small intraprocedural leak checker driven by annotation sets.
//!
//! Control flow is approximated by the textual nesting of `if`/`else`,
//! loops and `switch`. An allocation site is `v = callee(...)` where the
//! callee allocates its return value. Later releases of `v` are a call that
//! frees it, `return v`, storing it with `x = v` and taking `&v`. Passing
//! `v` to any other call is not a release.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crate::annotate::{AnnotationSet, Kind, Slot};
use crate::ingest::lexer::{tokenize, Token, TokenKind};
use crate::ingest::{body_open, FunctionId, FunctionRecord};

const STOCK_BUILTINS: &str = include_str!("../assets/builtins.json");

const KEYWORDS: [&str; 32] = [
    "auto", "break", "case", "char", "const", "continue", "default", "do", "double", "else", "enum", "extern", "float",
    "for", "goto", "if", "int", "long", "register", "return", "short", "signed", "sizeof", "static", "struct",
    "switch", "typedef", "union", "unsigned", "void", "volatile", "while",
];

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Builtins {
    #[serde(default)]
    pub allocators: BTreeSet<String>,
    /// Deallocator name to the 1-based positions it frees.
    #[serde(default)]
    pub deallocators: BTreeMap<String, Vec<usize>>,
}

#[derive(Debug, thiserror::Error)]
#[error("builtin table {path}: {message}")]
pub struct BuiltinsError {
    pub path: String,
    pub message: String,
}

impl Builtins {
    /// `malloc`, `calloc`, `realloc`, `strdup` and `free`.
    pub fn stock() -> Self {
        serde_json::from_str(STOCK_BUILTINS).expect("stock builtin table is valid")
    }

    pub fn empty() -> Self {
        Builtins::default()
    }

    pub fn load(path: &Path) -> Result<Self, BuiltinsError> {
        let err = |message: String| BuiltinsError {
            path: path.display().to_string(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let b: Builtins = serde_json::from_str(&text).map_err(|e| err(e.to_string()))?;
        if b.deallocators.values().flatten().any(|p| *p == 0) {
            return Err(err("deallocator positions are 1-based".into()));
        }
        Ok(b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LeakReason {
    NeverFreed,
    MayNotBeFreed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LeakWarning {
    pub function_id: FunctionId,
    pub function: String,
    pub file: String,
    pub variable: String,
    pub alloc_site: u32,
    pub alloc_callee: String,
    pub reason: LeakReason,
}

/// One branch: `(group, id)`. Branches of the same `if`/`else` share a group.
type Step = (u32, u32);

struct Shape<'t> {
    toks: &'t [Token<'t>],
    close: Vec<usize>,
    chain_of: Vec<usize>,
    chains: Vec<Vec<Step>>,
    /// Variable tested for null by the condition leading into a branch.
    null_guard: BTreeMap<u32, String>,
    /// `if` statements with an `else`: every path runs one of the branches.
    complete: Vec<Group>,
    counter: u32,
}

struct Group {
    parent: usize,
    start: usize,
    end: usize,
    /// (chain, first token, end token) per branch.
    branches: Vec<(usize, usize, usize)>,
}

fn matching(toks: &[Token]) -> Vec<usize> {
    let mut close = vec![toks.len(); toks.len()];
    let mut stack: Vec<usize> = Vec::new();
    for (i, t) in toks.iter().enumerate() {
        if t.is_punct("(") || t.is_punct("[") || t.is_punct("{") {
            stack.push(i);
        } else if t.is_punct(")") || t.is_punct("]") || t.is_punct("}") {
            if let Some(o) = stack.pop() {
                close[o] = i;
            }
        }
    }
    close
}

fn is_var(t: &Token) -> bool {
    t.is_ident() && !KEYWORDS.contains(&t.text)
}

/// `!v`, `v == NULL`, `NULL == v`, `v == 0`, optionally parenthesized.
fn null_tested(cond: &[Token]) -> Option<String> {
    let c = strip_parens(cond);
    let is_null = |t: &Token| t.is_ident_named("NULL") || t.text == "0";
    match c {
        [bang, rest @ ..] if bang.is_punct("!") => match strip_parens(rest) {
            [v] if is_var(v) => Some(v.text.to_string()),
            _ => None,
        },
        [v, eq, n] | [n, eq, v] if eq.is_punct("==") && is_var(v) && is_null(n) => Some(v.text.to_string()),
        _ => None,
    }
}

/// `v`, `v != NULL`, `v != 0`: the else branch is the null case.
fn nonnull_tested(cond: &[Token]) -> Option<String> {
    let c = strip_parens(cond);
    let is_null = |t: &Token| t.is_ident_named("NULL") || t.text == "0";
    match c {
        [v] if is_var(v) => Some(v.text.to_string()),
        [v, ne, n] | [n, ne, v] if ne.is_punct("!=") && is_var(v) && is_null(n) => Some(v.text.to_string()),
        _ => None,
    }
}

impl<'t> Shape<'t> {
    fn build(toks: &'t [Token<'t>]) -> Self {
        let mut s = Shape {
            toks,
            close: matching(toks),
            chain_of: vec![0; toks.len()],
            chains: vec![Vec::new()],
            null_guard: BTreeMap::new(),
            complete: Vec::new(),
            counter: 0,
        };
        s.seq(0, toks.len(), 0);
        s
    }

    fn fresh(&mut self) -> u32 {
        self.counter += 1;
        self.counter
    }

    fn branch(&mut self, parent: usize, group: u32) -> (usize, u32) {
        let id = self.fresh();
        let mut c = self.chains[parent].clone();
        c.push((group, id));
        self.chains.push(c);
        (self.chains.len() - 1, id)
    }

    fn mark(&mut self, from: usize, to: usize, chain: usize) {
        for i in from..to.min(self.toks.len()) {
            self.chain_of[i] = chain;
        }
    }

    fn seq(&mut self, mut i: usize, end: usize, chain: usize) {
        while i < end {
            let n = self.stmt(i, end, chain);
            i = if n > i { n } else { i + 1 };
        }
    }

    /// Parenthesized group at `i`, marked at `chain`; returns the index after it.
    fn paren(&mut self, i: usize, end: usize, chain: usize) -> usize {
        if i < end && self.toks[i].is_punct("(") {
            let c = self.close[i].min(end.saturating_sub(1));
            self.mark(i, c + 1, chain);
            c + 1
        } else {
            i
        }
    }

    fn stmt(&mut self, i: usize, end: usize, chain: usize) -> usize {
        if i >= end {
            return end;
        }
        let t = self.toks[i];
        self.chain_of[i] = chain;
        if t.is_punct("{") {
            let c = self.close[i].min(end);
            self.seq(i + 1, c, chain);
            if c < end {
                self.chain_of[c] = chain;
            }
            return c + 1;
        }
        if t.is_ident_named("if") {
            let after = self.paren(i + 1, end, chain);
            let cond = if after > i + 2 {
                &self.toks[i + 2..after - 1]
            } else {
                &[][..]
            };
            let (null_then, null_else) = (null_tested(cond), nonnull_tested(cond));
            let group = self.fresh();
            let (then_c, then_id) = self.branch(chain, group);
            if let Some(v) = null_then {
                self.null_guard.insert(then_id, v);
            }
            let mut n = self.stmt(after, end, then_c);
            if n < end && self.toks[n].is_ident_named("else") {
                self.chain_of[n] = chain;
                let then_end = n;
                let (else_c, else_id) = self.branch(chain, group);
                if let Some(v) = null_else {
                    self.null_guard.insert(else_id, v);
                }
                n = self.stmt(n + 1, end, else_c);
                self.complete.push(Group {
                    parent: chain,
                    start: i,
                    end: n,
                    branches: vec![(then_c, after, then_end), (else_c, then_end + 1, n)],
                });
            }
            return n;
        }
        if t.is_ident_named("while") || t.is_ident_named("for") || t.is_ident_named("switch") {
            let after = self.paren(i + 1, end, chain);
            let group = self.fresh();
            let (body, _) = self.branch(chain, group);
            return self.stmt(after, end, body);
        }
        if t.is_ident_named("do") {
            let group = self.fresh();
            let (body, _) = self.branch(chain, group);
            let mut n = self.stmt(i + 1, end, body);
            if n < end && self.toks[n].is_ident_named("while") {
                self.chain_of[n] = chain;
                n = self.paren(n + 1, end, chain);
                if n < end && self.toks[n].is_punct(";") {
                    self.chain_of[n] = chain;
                    n += 1;
                }
            }
            return n;
        }
        if t.is_ident_named("case") || t.is_ident_named("default") {
            let mut j = i + 1;
            while j < end && !self.toks[j].is_punct(":") {
                self.chain_of[j] = chain;
                j += 1;
            }
            self.mark(j, j + 1, chain);
            return j + 1;
        }
        if is_var(&t) && i + 1 < end && self.toks[i + 1].is_punct(":") {
            self.chain_of[i + 1] = chain;
            return i + 2;
        }
        let mut j = i;
        while j < end {
            let tj = self.toks[j];
            if tj.is_punct("}") {
                return j;
            }
            if tj.is_punct("(") || tj.is_punct("[") || tj.is_punct("{") {
                let c = self.close[j].min(end.saturating_sub(1));
                self.mark(j, c + 1, chain);
                j = c + 1;
                continue;
            }
            self.chain_of[j] = chain;
            if tj.is_punct(";") {
                return j + 1;
            }
            j += 1;
        }
        end
    }

    /// Every path through the branch `chain` spanning `lo..hi` passes one of
    /// the `releases`.
    fn must_release(&self, chain: usize, lo: usize, hi: usize, releases: &[usize]) -> bool {
        releases.iter().any(|&r| r >= lo && r < hi && self.chain_of[r] == chain)
            || self.complete.iter().any(|g| {
                g.parent == chain
                    && g.start >= lo
                    && g.end <= hi
                    && g.branches.iter().all(|&(c, l, h)| self.must_release(c, l, h, releases))
            })
    }

    fn chain(&self, pos: usize) -> &[Step] {
        if pos >= self.toks.len() {
            &self.chains[0]
        } else {
            &self.chains[self.chain_of[pos]]
        }
    }
}

fn prefix(a: &[Step], b: &[Step]) -> bool {
    a.len() <= b.len() && b[..a.len()] == *a
}

/// Sibling branches of one `if` never both execute.
fn exclusive(a: &[Step], b: &[Step]) -> bool {
    a.iter().zip(b).find(|(x, y)| x != y).is_some_and(|(x, y)| x.0 == y.0)
}

fn strip_parens<'a, 't>(mut e: &'a [Token<'t>]) -> &'a [Token<'t>] {
    while e.len() >= 2 && e[0].is_punct("(") && e[e.len() - 1].is_punct(")") {
        let close = matching(e)[0];
        if close != e.len() - 1 {
            break;
        }
        e = &e[1..e.len() - 1];
    }
    e
}

fn looks_like_type(inner: &[Token]) -> bool {
    !inner.is_empty()
        && inner.iter().any(|t| t.is_ident())
        && inner.iter().all(|t| t.is_ident() || t.is_punct("*"))
        && (inner.len() > 1 || inner.iter().all(|t| t.is_ident()))
}

/// Drop outer parentheses and leading casts.
fn strip_casts<'a, 't>(e: &'a [Token<'t>]) -> &'a [Token<'t>] {
    let close = matching(e);
    let (lo, hi) = strip_range(e, &close, 0, e.len());
    &e[lo..hi]
}

/// Range form of `strip_casts` over `toks[lo..hi]`, using the bracket table
/// of the whole token list.
fn strip_range(toks: &[Token], close: &[usize], mut lo: usize, mut hi: usize) -> (usize, usize) {
    loop {
        if hi >= lo + 2 && toks[lo].is_punct("(") && close[lo] == hi - 1 {
            lo += 1;
            hi -= 1;
            continue;
        }
        if hi >= lo + 3 && toks[lo].is_punct("(") && close[lo] + 1 < hi && looks_like_type(&toks[lo + 1..close[lo]]) {
            lo = close[lo] + 1;
            continue;
        }
        return (lo, hi);
    }
}

fn split_args<'a, 't>(args: &'a [Token<'t>]) -> Vec<&'a [Token<'t>]> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, t) in args.iter().enumerate() {
        if t.is_punct("(") || t.is_punct("[") || t.is_punct("{") {
            depth += 1;
        } else if t.is_punct(")") || t.is_punct("]") || t.is_punct("}") {
            depth -= 1;
        } else if depth == 0 && t.is_punct(",") {
            out.push(&args[start..i]);
            start = i + 1;
        }
    }
    if start < args.len() {
        out.push(&args[start..]);
    }
    out
}

/// End of the expression starting at `i`: the first `;` or `,` at depth 0,
/// or an unmatched closing bracket.
fn expr_end(toks: &[Token], i: usize) -> usize {
    let mut depth = 0i32;
    for (j, t) in toks.iter().enumerate().skip(i) {
        if t.is_punct("(") || t.is_punct("[") || t.is_punct("{") {
            depth += 1;
        } else if t.is_punct(")") || t.is_punct("]") || t.is_punct("}") {
            if depth == 0 {
                return j;
            }
            depth -= 1;
        } else if depth == 0 && (t.is_punct(";") || t.is_punct(",")) {
            return j;
        }
    }
    toks.len()
}

struct Site {
    pos: usize,
    after: usize,
    var: String,
    callee: String,
    line: u32,
}

enum Event {
    /// Freed, returned, stored or address taken.
    Release(String),
    /// Return of anything else.
    Exit,
}

fn is_allocator(name: &str, set: &AnnotationSet, builtins: &Builtins) -> bool {
    builtins.allocators.contains(name)
        || set
            .get(name)
            .is_some_and(|a| a.kind_at(Slot::Return) == Some(Kind::AllocSource))
}

fn sink_positions(name: &str, set: &AnnotationSet, builtins: &Builtins) -> BTreeSet<usize> {
    let mut out: BTreeSet<usize> = builtins.deallocators.get(name).into_iter().flatten().copied().collect();
    if let Some(a) = set.get(name) {
        for (slot, k) in &a.entries {
            if let (Slot::Param(i), Kind::FreeSink) = (slot, k.kind) {
                out.insert(*i);
            }
        }
    }
    out
}

fn scan(toks: &[Token], close: &[usize], set: &AnnotationSet, builtins: &Builtins) -> (Vec<Site>, Vec<(usize, Event)>) {
    let mut sites = Vec::new();
    let mut events = Vec::new();
    let member = |i: usize| i > 0 && (toks[i - 1].is_punct("->") || toks[i - 1].is_punct("."));
    for i in 0..toks.len() {
        let t = toks[i];
        if t.is_ident_named("return") {
            let end = expr_end(toks, i + 1);
            let e = &toks[i + 1..end];
            match strip_casts(e) {
                [v] if is_var(v) => events.push((i, Event::Release(v.text.to_string()))),
                _ => {}
            }
            events.push((i, Event::Exit));
            continue;
        }
        if t.is_punct("=") {
            let end = expr_end(toks, i + 1);
            let rhs = strip_casts(&toks[i + 1..end]);
            if let [v] = rhs {
                if is_var(v) {
                    events.push((i, Event::Release(v.text.to_string())));
                }
            }
            if i > 0 && is_var(&toks[i - 1]) && !member(i - 1) {
                let (lo, hi) = strip_range(toks, close, i + 1, end);
                let call = hi >= lo + 3 && is_var(&toks[lo]) && toks[lo + 1].is_punct("(") && close[lo + 1] == hi - 1;
                if call && is_allocator(toks[lo].text, set, builtins) {
                    sites.push(Site {
                        pos: i - 1,
                        after: end,
                        var: toks[i - 1].text.to_string(),
                        callee: toks[lo].text.to_string(),
                        line: toks[i - 1].line,
                    });
                }
            }
            continue;
        }
        if t.is_punct("&") && i + 1 < toks.len() && is_var(&toks[i + 1]) {
            let unary = i == 0 || {
                let p = toks[i - 1];
                !(p.kind == TokenKind::Number
                    || (p.is_ident() && !p.is_ident_named("return"))
                    || p.is_punct(")")
                    || p.is_punct("]"))
            };
            if unary {
                events.push((i, Event::Release(toks[i + 1].text.to_string())));
            }
            continue;
        }
        if is_var(&t) && i + 1 < toks.len() && toks[i + 1].is_punct("(") && !member(i) {
            let sinks = sink_positions(t.text, set, builtins);
            if sinks.is_empty() {
                continue;
            }
            let c = close[i + 1].min(toks.len());
            let args = split_args(&toks[i + 2..c]);
            for p in sinks {
                if let Some(arg) = args.get(p - 1) {
                    if let [v] = strip_casts(arg) {
                        if is_var(v) {
                            events.push((i, Event::Release(v.text.to_string())));
                        }
                    }
                }
            }
        }
    }
    (sites, events)
}

/// Leak warnings for one function.
///
/// NeverFreed: no release of the variable is reachable after the site.
/// MayNotBeFreed: some release is reachable, but some later return (or the
/// end of the body) can be reached without passing one. Returns inside a
/// branch taken only when the variable is null are ignored.
pub fn check_function(function: &FunctionRecord, annotations: &AnnotationSet, builtins: &Builtins) -> Vec<LeakWarning> {
    let all = tokenize(&function.body);
    let Some(open) = body_open(&all) else {
        return Vec::new();
    };
    let mut toks: Vec<Token> = all[open + 1..]
        .iter()
        .copied()
        .filter(|t| t.kind != TokenKind::Directive)
        .collect();
    if toks.last().is_some_and(|t| t.is_punct("}")) {
        toks.pop();
    }
    let shape = Shape::build(&toks);
    let (sites, events) = scan(&toks, &shape.close, annotations, builtins);
    let root_return = events
        .iter()
        .any(|(p, e)| matches!(e, Event::Exit) && shape.chain(*p).is_empty());
    let end = toks.len();

    let mut out = Vec::new();
    for s in &sites {
        let sc = shape.chain(s.pos);
        let reachable = |p: usize| p >= s.after && !exclusive(sc, shape.chain(p));
        let releases: Vec<usize> = events
            .iter()
            .filter(|(p, e)| matches!(e, Event::Release(v) if *v == s.var) && reachable(*p))
            .map(|(p, _)| *p)
            .collect();
        let reason = if releases.is_empty() {
            Some(LeakReason::NeverFreed)
        } else {
            let mut exits: Vec<usize> = events
                .iter()
                .filter(|(p, e)| matches!(e, Event::Exit) && reachable(*p))
                .map(|(p, _)| *p)
                .filter(|p| !releases.contains(p))
                .collect();
            if !root_return {
                exits.push(end);
            }
            let guarded = |x: usize| {
                shape.chain(x)[..]
                    .iter()
                    .any(|(_, id)| shape.null_guard.get(id).is_some_and(|v| *v == s.var))
            };
            let encloses = |c: &[Step], x: usize| prefix(c, sc) || prefix(c, shape.chain(x));
            let covered = |x: usize| {
                releases.iter().any(|&r| r < x && encloses(shape.chain(r), x))
                    || shape.complete.iter().any(|g| {
                        g.start >= s.after
                            && g.end <= x
                            && encloses(&shape.chains[g.parent], x)
                            && g.branches
                                .iter()
                                .all(|&(c, l, h)| shape.must_release(c, l, h, &releases))
                    })
            };
            exits
                .into_iter()
                .any(|x| !guarded(x) && !covered(x))
                .then_some(LeakReason::MayNotBeFreed)
        };
        if let Some(reason) = reason {
            out.push(LeakWarning {
                function_id: function.id.clone(),
                function: function.name.clone(),
                file: function.file.clone(),
                variable: s.var.clone(),
                alloc_site: function.start_line + s.line - 1,
                alloc_callee: s.callee.clone(),
                reason,
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckReport {
    /// Digest of the annotation set used, or "none".
    pub annotations: String,
    pub total: usize,
    pub never_freed: usize,
    pub may_not_be_freed: usize,
    /// Warning count per function id, for functions with warnings.
    pub per_function: BTreeMap<String, usize>,
    pub warnings: Vec<LeakWarning>,
}

impl CheckReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for w in &self.warnings {
            let what = match w.reason {
                LeakReason::NeverFreed => "is never freed",
                LeakReason::MayNotBeFreed => "may not be freed",
            };
            s.push_str(&format!(
                "{}:{}: {}: memory from {} in '{}' {what}\n",
                w.file, w.alloc_site, w.function, w.alloc_callee, w.variable
            ));
        }
        s.push_str(&format!(
            "{} warnings ({} never freed, {} may not be freed)\n",
            self.total, self.never_freed, self.may_not_be_freed
        ));
        s
    }
}

/// Stable digest naming an annotation set in reports.
pub fn annotation_identity(set: Option<&AnnotationSet>) -> String {
    match set {
        None => "none".into(),
        Some(s) => {
            let digest = Sha256::digest(s.to_json().as_bytes());
            format!("sha256:{}", hex::encode(&digest[..8]))
        }
    }
}

/// Check every definition. Warnings are ordered by (file, line).
pub fn check_corpus(
    functions: &[FunctionRecord],
    annotations: Option<&AnnotationSet>,
    builtins: &Builtins,
) -> CheckReport {
    use rayon::prelude::*;
    let empty = AnnotationSet::default();
    let set = annotations.unwrap_or(&empty);
    let mut warnings: Vec<LeakWarning> = functions
        .par_iter()
        .filter(|f| f.is_definition)
        .flat_map_iter(|f| check_function(f, set, builtins))
        .collect();
    warnings.sort_by(|a, b| (&a.file, a.alloc_site, &a.variable).cmp(&(&b.file, b.alloc_site, &b.variable)));
    let mut per_function = BTreeMap::new();
    for w in &warnings {
        *per_function.entry(w.function_id.to_string()).or_insert(0) += 1;
    }
    let never_freed = warnings.iter().filter(|w| w.reason == LeakReason::NeverFreed).count();
    CheckReport {
        annotations: annotation_identity(annotations),
        total: warnings.len(),
        never_freed,
        may_not_be_freed: warnings.len() - never_freed,
        per_function,
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotate::{FunctionAnnotation, Metadata, Provenance, Qualifiers};
    use crate::ingest::{extract_from_source, ExtractOptions};

    fn run(src: &str, set: &AnnotationSet) -> Vec<(String, LeakReason)> {
        let fs = extract_from_source("t.c", src, &ExtractOptions::default()).functions;
        check_function(&fs[0], set, &Builtins::stock())
            .into_iter()
            .map(|w| (w.variable, w.reason))
            .collect()
    }

    fn none(src: &str) -> Vec<(String, LeakReason)> {
        run(src, &AnnotationSet::default())
    }

    fn labels(items: &[(&str, Slot, Kind)]) -> AnnotationSet {
        let mut s = AnnotationSet::new(Metadata::default());
        for (name, slot, kind) in items {
            let mut a = FunctionAnnotation::new(None, Provenance::Manual, None);
            a.entries.insert(*slot, Qualifiers::default().of(*kind));
            s.insert(*name, a);
        }
        s
    }

    const NF: LeakReason = LeakReason::NeverFreed;
    const MN: LeakReason = LeakReason::MayNotBeFreed;

    #[test]
    fn paired_and_unpaired() {
        assert!(none("void f(int n) { char *p = malloc(n); free(p); }").is_empty());
        assert_eq!(
            none("void f(int n) { char *p = malloc(n); use(p); }"),
            [("p".into(), NF)]
        );
        assert_eq!(
            none("void f(int n, int c) { char *p; p = malloc(n); if (c) free(p); }"),
            [("p".into(), MN)]
        );
    }

    #[test]
    fn both_branches_and_loops() {
        assert!(none("void f(int c) { char *p = malloc(1); if (c) { free(p); } else { free(p); } }").is_empty());
        assert!(none("void f(int c) { while (c--) { char *p = malloc(1); free(p); } }").is_empty());
        assert_eq!(
            none("void f(int c) { char *p = malloc(1); while (c--) free(p); }"),
            [("p".into(), MN)]
        );
    }

    #[test]
    fn sibling_branch_is_unreachable() {
        let src = "void f(int c) { char *p; if (c) p = malloc(1); else free(p); }";
        assert_eq!(none(src), [("p".into(), NF)]);
    }

    #[test]
    fn escapes() {
        assert!(none("char *f(void) { char *p = malloc(1); return p; }").is_empty());
        assert!(none("void *f(void) { char *p = (char *)malloc(1); return (void *)p; }").is_empty());
        assert!(none("void f(struct s *o) { char *p = malloc(1); o->buf = p; }").is_empty());
        assert!(none("void f(void) { char *p = malloc(1); keep(&p); }").is_empty());
    }

    #[test]
    fn early_exit_before_release() {
        let src = "int f(int c) { char *p = malloc(1); if (c) return -1; free(p); return 0; }";
        assert_eq!(none(src), [("p".into(), MN)]);
        let src = "int f(int c) { char *p = malloc(1); if (c) { free(p); return -1; } free(p); return 0; }";
        assert!(none(src).is_empty());
    }

    #[test]
    fn null_check_exit_is_not_a_leak() {
        let src = "int f(void) { char *p = malloc(1); if (p == NULL) return -1; free(p); return 0; }";
        assert!(none(src).is_empty());
        let src = "int f(void) { char *p = malloc(1); if (!p) { return -1; } free(p); return 0; }";
        assert!(none(src).is_empty());
    }

    #[test]
    fn annotations_drive_sites_and_sinks() {
        let src = "void f(void) { pool *p = pool_new(4); use(p); my_free(p); }";
        assert!(none(src).is_empty());
        let alloc = labels(&[("pool_new", Slot::Return, Kind::AllocSource)]);
        assert_eq!(run(src, &alloc), [("p".into(), NF)]);
        let both = labels(&[
            ("pool_new", Slot::Return, Kind::AllocSource),
            ("my_free", Slot::Param(1), Kind::FreeSink),
        ]);
        assert!(run(src, &both).is_empty());
        let wrong_pos = labels(&[
            ("pool_new", Slot::Return, Kind::AllocSource),
            ("my_free", Slot::Param(2), Kind::FreeSink),
        ]);
        assert_eq!(run(src, &wrong_pos).len(), 1);
    }

    #[test]
    fn member_assignments_are_not_sites() {
        assert!(none("void f(struct s *o) { o->p = malloc(1); }").is_empty());
    }

    #[test]
    fn empty_builtins_see_nothing() {
        let fs = extract_from_source(
            "t.c",
            "void f(void) { char *p = malloc(1); }",
            &ExtractOptions::default(),
        )
        .functions;
        assert!(check_function(&fs[0], &AnnotationSet::default(), &Builtins::empty()).is_empty());
    }

    #[test]
    fn alloc_site_line_is_absolute() {
        let fs = extract_from_source(
            "t.c",
            "\n\nvoid f(void)\n{\n  char *p = malloc(1);\n}\n",
            &ExtractOptions::default(),
        )
        .functions;
        let w = check_function(&fs[0], &AnnotationSet::default(), &Builtins::stock());
        assert_eq!(w[0].alloc_site, 5);
    }
}
