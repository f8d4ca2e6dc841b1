//! Optional pruning of conditional-compilation branches.
//!
//! By default every `#if` branch is kept. When the caller names macros that
//! are known to be undefined, branches guarded by `#ifdef M`,
//! `#if defined(M)` (and the negated forms) are resolved; any other
//! condition stays unknown and all of its branches remain visible.

use super::lexer::{Token, TokenKind};
use std::collections::BTreeSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Cond {
    True,
    False,
    Unknown,
}

struct Frame {
    parent_active: bool,
    /// Some earlier branch of this group was known to be taken.
    taken: bool,
    /// Every earlier branch was known to be false.
    all_false: bool,
    active: bool,
}

fn directive_parts(text: &str) -> (&str, &str) {
    let body = text.trim_start_matches('#').trim_start();
    let split = body
        .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_'))
        .unwrap_or(body.len());
    (&body[..split], body[split..].trim())
}

fn eval_defined(expr: &str, undefined: &BTreeSet<String>) -> Cond {
    let compact: String = expr
        .split("/*")
        .next()
        .unwrap_or("")
        .split("//")
        .next()
        .unwrap_or("")
        .chars()
        .filter(|c| !c.is_whitespace())
        .collect();
    let (negated, rest) = match compact.strip_prefix('!') {
        Some(r) => (true, r),
        None => (false, compact.as_str()),
    };
    let name = rest
        .strip_prefix("defined(")
        .and_then(|r| r.strip_suffix(')'))
        .or_else(|| rest.strip_prefix("defined"));
    match name {
        Some(n) if undefined.contains(n) => {
            if negated {
                Cond::True
            } else {
                Cond::False
            }
        }
        _ => Cond::Unknown,
    }
}

fn eval(keyword: &str, arg: &str, undefined: &BTreeSet<String>) -> Cond {
    let first = arg.split_whitespace().next().unwrap_or("");
    match keyword {
        "ifdef" if undefined.contains(first) => Cond::False,
        "ifndef" if undefined.contains(first) => Cond::True,
        "if" | "elif" => eval_defined(arg, undefined),
        _ => Cond::Unknown,
    }
}

/// Drop tokens that sit in branches known to be inactive. Directive tokens
/// of the active region are preserved.
pub fn prune_inactive<'a>(tokens: Vec<Token<'a>>, undefined: &BTreeSet<String>) -> Vec<Token<'a>> {
    if undefined.is_empty() {
        return tokens;
    }
    let mut stack: Vec<Frame> = Vec::new();
    let mut out = Vec::with_capacity(tokens.len());
    let active = |stack: &[Frame]| stack.last().is_none_or(|f| f.active);

    for tok in tokens {
        if tok.kind != TokenKind::Directive {
            if active(&stack) {
                out.push(tok);
            }
            continue;
        }
        let (keyword, arg) = directive_parts(tok.text);
        match keyword {
            "if" | "ifdef" | "ifndef" => {
                let parent_active = active(&stack);
                let c = eval(keyword, arg, undefined);
                stack.push(Frame {
                    parent_active,
                    taken: c == Cond::True,
                    all_false: c == Cond::False,
                    active: parent_active && c != Cond::False,
                });
            }
            "elif" => {
                if let Some(f) = stack.last_mut() {
                    let c = eval("elif", arg, undefined);
                    f.active = f.parent_active && !f.taken && c != Cond::False;
                    f.taken |= c == Cond::True;
                    f.all_false &= c == Cond::False;
                }
            }
            "else" => {
                if let Some(f) = stack.last_mut() {
                    f.active = f.parent_active && !f.taken;
                    if f.all_false {
                        f.taken = true;
                    }
                }
            }
            "endif" => {
                stack.pop();
            }
            _ => {}
        }
        let keep_directive = match keyword {
            "if" | "ifdef" | "ifndef" => stack.last().is_some_and(|f| f.parent_active),
            _ => active(&stack),
        };
        if keep_directive {
            out.push(tok);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::lexer::tokenize;

    fn idents(src: &str, undefined: &[&str]) -> Vec<String> {
        let set = undefined.iter().map(|s| s.to_string()).collect();
        prune_inactive(tokenize(src), &set)
            .into_iter()
            .filter(|t| t.is_ident())
            .map(|t| t.text.to_string())
            .collect()
    }

    const SRC: &str =
        "#if defined(_MSC_VER)\na\n#else\nb\n#endif\n#ifndef _MSC_VER\nc\n#endif\n#if FOO\nd\n#else\ne\n#endif\n";

    #[test]
    fn keeps_everything_without_assumptions() {
        assert_eq!(idents(SRC, &[]), ["a", "b", "c", "d", "e"]);
    }

    #[test]
    fn resolves_known_undefined_macro() {
        assert_eq!(idents(SRC, &["_MSC_VER"]), ["b", "c", "d", "e"]);
    }

    #[test]
    fn nested_groups_inherit_inactivity() {
        let src = "#ifdef X\n#if Y\na\n#else\nb\n#endif\n#endif\nc\n";
        assert_eq!(idents(src, &["X"]), ["c"]);
    }

    #[test]
    fn elif_after_known_false() {
        let src = "#if defined X\na\n#elif defined(Y)\nb\n#else\nc\n#endif\n";
        assert_eq!(idents(src, &["X", "Y"]), ["c"]);
        assert_eq!(idents(src, &["X"]), ["b", "c"]);
    }
}
