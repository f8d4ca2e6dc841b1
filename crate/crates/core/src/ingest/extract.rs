//! Function-definition extraction over the token stream.
//!
//! A definition is recognised as `<decl tokens> ident ( params ) {` at brace
//! depth zero. `extern "C" { ... }` blocks are transparent. Aggregate bodies
//! and initialisers at file scope are skipped.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

use super::cond::prune_inactive;
use super::lexer::{tokenize, Token, TokenKind};
use super::scan::CorpusIndex;

/// Stable identifier: `<file>:<name>:<start_line>`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FunctionId(pub String);

impl FunctionId {
    pub fn new(file: &str, name: &str, start_line: u32) -> Self {
        FunctionId(format!("{file}:{name}:{start_line}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for FunctionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub type_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionRecord {
    pub id: FunctionId,
    pub file: String,
    pub name: String,
    pub params: Vec<Param>,
    pub return_type_text: String,
    /// Full definition text, header included.
    pub body: String,
    pub start_line: u32,
    pub end_line: u32,
    pub is_definition: bool,
}

impl FunctionRecord {
    pub fn arity(&self) -> usize {
        self.params.len()
    }

    /// 1-based position of the parameter called `name`.
    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p.name == name).map(|i| i + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub file: String,
    pub line: u32,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.file, self.line, self.message)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ExtractOptions {
    /// Macros assumed undefined when resolving `#ifdef`-style branches.
    pub assume_undefined: BTreeSet<String>,
}

#[derive(Debug, Clone, Default)]
pub struct Extraction {
    pub functions: Vec<FunctionRecord>,
    /// Names introduced by `typedef struct ... Name;` / `typedef union ...`.
    pub aggregate_typedefs: BTreeSet<String>,
    pub diagnostics: Vec<Diagnostic>,
}

const STORAGE: [&str; 7] = [
    "static",
    "inline",
    "extern",
    "__inline",
    "__inline__",
    "__forceinline",
    "_Noreturn",
];

const NON_NAMES: [&str; 10] = [
    "if",
    "while",
    "for",
    "switch",
    "return",
    "sizeof",
    "do",
    "else",
    "case",
    "__attribute__",
];

pub(crate) const TYPE_WORDS: [&str; 17] = [
    "void", "char", "short", "int", "long", "float", "double", "signed", "unsigned", "_Bool", "bool", "const",
    "volatile", "restrict", "struct", "union", "enum",
];

/// Join tokens into a normalised type/expression string.
pub(crate) fn join_tokens(toks: &[Token<'_>]) -> String {
    let mut s = String::new();
    let mut prev: Option<&Token<'_>> = None;
    for t in toks {
        if let Some(p) = prev {
            let tight_before = matches!(t.text, "," | ")" | "]")
                || (t.text == "(" && p.is_ident() && !TYPE_WORDS.contains(&p.text))
                || (t.text == "(" && p.text == ")")
                || (t.text == "*" && p.text == "*");
            let tight_after = matches!(p.text, "(" | "[");
            if !tight_before && !tight_after {
                s.push(' ');
            }
        }
        s.push_str(t.text);
        prev = Some(t);
    }
    s
}

fn matching_open(toks: &[Token<'_>], close: usize) -> Option<usize> {
    let mut depth = 0i32;
    for i in (0..=close).rev() {
        if toks[i].is_punct(")") {
            depth += 1;
        } else if toks[i].is_punct("(") {
            depth -= 1;
            if depth == 0 {
                return Some(i);
            }
        }
    }
    None
}

fn split_commas<'t, 'a>(toks: &'t [Token<'a>]) -> Vec<&'t [Token<'a>]> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, t) in toks.iter().enumerate() {
        match t.text {
            "(" | "[" | "{" if t.kind == TokenKind::Punct => depth += 1,
            ")" | "]" | "}" if t.kind == TokenKind::Punct => depth -= 1,
            "," if t.kind == TokenKind::Punct && depth == 0 => {
                parts.push(&toks[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    if start < toks.len() || !parts.is_empty() {
        parts.push(&toks[start..]);
    }
    parts
}

fn parse_param(toks: &[Token<'_>]) -> Option<Param> {
    if toks.is_empty() || (toks.len() == 1 && toks[0].is_punct("...")) {
        return None;
    }
    // Function pointer: `ret (*name)(args)`.
    if let Some(open) = toks.iter().position(|t| t.is_punct("(")) {
        if toks.get(open + 1).is_some_and(|t| t.is_punct("*")) {
            if let Some(pos) = toks[open + 1..].iter().position(|t| t.is_ident()).map(|p| p + open + 1) {
                if toks[open + 1..pos].iter().all(|t| t.is_punct("*") || t.text == "const") {
                    let name = toks[pos].text.to_string();
                    let rest: Vec<Token<'_>> = toks
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| *i != pos)
                        .map(|(_, t)| *t)
                        .collect();
                    return Some(Param {
                        name,
                        type_text: join_tokens(&rest),
                    });
                }
            }
        }
    }
    // Strip trailing array declarators.
    let mut end = toks.len();
    while end > 0 && toks[end - 1].is_punct("]") {
        let mut depth = 0;
        let mut j = end;
        while j > 0 {
            j -= 1;
            if toks[j].is_punct("]") {
                depth += 1;
            } else if toks[j].is_punct("[") {
                depth -= 1;
                if depth == 0 {
                    break;
                }
            }
        }
        end = j;
    }
    let last = end.checked_sub(1)?;
    let named = end >= 2 && toks[last].is_ident() && !TYPE_WORDS.contains(&toks[last].text);
    if named {
        let mut type_toks: Vec<Token<'_>> = toks[..last].to_vec();
        type_toks.extend_from_slice(&toks[end..]);
        Some(Param {
            name: toks[last].text.to_string(),
            type_text: join_tokens(&type_toks),
        })
    } else {
        Some(Param {
            name: String::new(),
            type_text: join_tokens(toks),
        })
    }
}

struct Header {
    name: String,
    params: Vec<Param>,
    return_type_text: String,
}

fn parse_header(toks: &[Token<'_>]) -> Option<Header> {
    let close = toks.len().checked_sub(1)?;
    if !toks[close].is_punct(")") {
        return None;
    }
    let open = matching_open(toks, close)?;
    let name_idx = open.checked_sub(1)?;
    let name_tok = toks[name_idx];
    if !name_tok.is_ident() || NON_NAMES.contains(&name_tok.text) || TYPE_WORDS.contains(&name_tok.text) {
        return None;
    }
    let prefix = &toks[..name_idx];
    if prefix
        .iter()
        .any(|t| t.is_punct("=") || t.is_ident_named("typedef") || t.kind == TokenKind::Str)
    {
        return None;
    }
    let ret: Vec<Token<'_>> = prefix
        .iter()
        .filter(|t| !(t.is_ident() && STORAGE.contains(&t.text)))
        .copied()
        .collect();
    let inner = &toks[open + 1..close];
    let parts = split_commas(inner);
    let params = if parts.len() == 1 && parts[0].len() == 1 && parts[0][0].is_ident_named("void") {
        Vec::new()
    } else {
        parts.into_iter().filter_map(parse_param).collect()
    };
    Some(Header {
        name: name_tok.text.to_string(),
        params,
        return_type_text: join_tokens(&ret),
    })
}

/// `typedef struct|union [tag] [{...}] Name [, *PName];` at file scope.
fn typedef_names(decl: &[Token<'_>], out: &mut BTreeSet<String>) {
    if decl.len() < 3
        || !decl[0].is_ident_named("typedef")
        || !(decl[1].is_ident_named("struct") || decl[1].is_ident_named("union"))
    {
        return;
    }
    let mut i = 2;
    if decl.get(i).is_some_and(|t| t.is_ident()) && decl.get(i + 1).is_some_and(|t| !t.is_punct(";")) {
        i += 1;
    }
    // Skip a body if present.
    if decl.get(i).is_some_and(|t| t.is_punct("{")) {
        let mut depth = 0;
        while i < decl.len() {
            if decl[i].is_punct("{") {
                depth += 1;
            } else if decl[i].is_punct("}") {
                depth -= 1;
                if depth == 0 {
                    i += 1;
                    break;
                }
            }
            i += 1;
        }
    }
    let mut rest = &decl[i.min(decl.len())..];
    if rest.last().is_some_and(|t| t.is_punct(";")) {
        rest = &rest[..rest.len() - 1];
    }
    for part in split_commas(rest) {
        if part.len() == 1 && part[0].is_ident() {
            out.insert(part[0].text.to_string());
        }
    }
}

/// Extract function definitions from one file's text.
pub fn extract_from_source(file: &str, src: &str, opts: &ExtractOptions) -> Extraction {
    let toks = prune_inactive(tokenize(src), &opts.assume_undefined);
    let mut out = Extraction::default();

    let mut depth = 0usize;
    let mut transparent = 0usize;
    let mut paren = 0i32;
    let mut decl_start: Option<usize> = None;
    // Start index of the current function's declaration and its header.
    let mut current: Option<(usize, Header)> = None;
    let mut open_line = 0u32;

    for i in 0..toks.len() {
        let t = toks[i];
        if t.kind == TokenKind::Directive {
            if depth == 0 && paren == 0 {
                decl_start = None;
            }
            continue;
        }
        if depth > 0 {
            if t.is_punct("{") {
                depth += 1;
            } else if t.is_punct("}") {
                depth -= 1;
                if depth == 0 {
                    if let Some((start, h)) = current.take() {
                        let first = toks[start];
                        out.functions.push(FunctionRecord {
                            id: FunctionId::new(file, &h.name, first.line),
                            file: file.to_string(),
                            name: h.name,
                            params: h.params,
                            return_type_text: h.return_type_text,
                            body: src[first.start..t.end].to_string(),
                            start_line: first.line,
                            end_line: t.line,
                            is_definition: true,
                        });
                        decl_start = None;
                    }
                }
            }
            continue;
        }

        let start = *decl_start.get_or_insert(i);
        if t.is_punct("(") {
            paren += 1;
        } else if t.is_punct(")") {
            paren = (paren - 1).max(0);
        } else if t.is_punct(";") && paren == 0 {
            typedef_names(&toks[start..=i], &mut out.aggregate_typedefs);
            decl_start = None;
        } else if t.is_punct("{") && paren == 0 {
            let is_extern_c = i >= 2 && toks[i - 1].kind == TokenKind::Str && toks[i - 2].is_ident_named("extern");
            if is_extern_c {
                transparent += 1;
                decl_start = None;
                continue;
            }
            open_line = t.line;
            depth = 1;
            current = parse_header(&toks[start..i]).map(|h| (start, h));
        } else if t.is_punct("}") && paren == 0 {
            if transparent > 0 {
                transparent -= 1;
            } else {
                out.diagnostics.push(Diagnostic {
                    file: file.to_string(),
                    line: t.line,
                    message: "unmatched '}' at file scope".into(),
                });
            }
            decl_start = None;
        }
    }
    if depth > 0 {
        let what = current
            .as_ref()
            .map(|(_, h)| format!("function '{}'", h.name))
            .unwrap_or_else(|| "block".into());
        out.diagnostics.push(Diagnostic {
            file: file.to_string(),
            line: open_line,
            message: format!("unbalanced braces: {what} opened here is never closed"),
        });
    }
    out
}

/// Extract every function definition in the index, files in parallel.
pub fn extract_functions(index: &CorpusIndex, opts: &ExtractOptions) -> Extraction {
    let per_file: Vec<Extraction> = index
        .files
        .par_iter()
        .map(|f| extract_from_source(&f.path, &f.content, opts))
        .collect();
    let mut out = Extraction::default();
    for e in per_file {
        out.functions.extend(e.functions);
        out.aggregate_typedefs.extend(e.aggregate_typedefs);
        out.diagnostics.extend(e.diagnostics);
    }
    out.functions
        .sort_by(|a, b| (&a.file, a.start_line).cmp(&(&b.file, b.start_line)));
    out
}
