use std::collections::BTreeSet;

use super::types::{FunctionAnnotation, Provenance, Slot};
use crate::ingest::lexer::tokenize;
use crate::ingest::FunctionRecord;
use crate::llm::{parse_postfilter_response, GenerationConfig, LlmClient, Verdict};
use crate::prompts::PromptSet;

/// Aggregate named by a pointer parameter type: `struct N *` (also `union`)
/// or a known aggregate typedef followed by `*`. Qualifiers between the name
/// and the star are allowed.
pub fn pointed_aggregate(type_text: &str, aggregates: &BTreeSet<String>) -> Option<String> {
    let toks = tokenize(type_text);
    let star_follows = |from: usize| {
        toks[from..]
            .iter()
            .find(|t| !(t.is_ident_named("const") || t.is_ident_named("volatile") || t.is_ident_named("restrict")))
            .is_some_and(|t| t.is_punct("*"))
    };
    for i in 0..toks.len() {
        let t = &toks[i];
        if (t.is_ident_named("struct") || t.is_ident_named("union"))
            && toks.get(i + 1).is_some_and(|n| n.is_ident())
            && star_follows(i + 2)
        {
            return Some(toks[i + 1].text.to_string());
        }
        if t.is_ident()
            && aggregates.contains(t.text)
            && !(i > 0 && (toks[i - 1].is_ident_named("struct") || toks[i - 1].is_ident_named("union")))
            && star_follows(i + 1)
        {
            return Some(t.text.to_string());
        }
    }
    None
}

/// (param name, aggregate name) for every parameter pointing to an aggregate.
pub fn struct_params(function: &FunctionRecord, aggregates: &BTreeSet<String>) -> Vec<(String, String)> {
    function
        .params
        .iter()
        .filter_map(|p| pointed_aggregate(&p.type_text, aggregates).map(|s| (p.name.clone(), s)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PostFilterOutcome {
    pub annotation: FunctionAnnotation,
    pub diagnostics: Vec<String>,
    pub queries: usize,
    pub removed: bool,
}

pub struct PostFilterContext<'a> {
    pub client: &'a LlmClient,
    pub prompts: &'a PromptSet,
    pub generation: &'a GenerationConfig,
    pub aggregates: &'a BTreeSet<String>,
}

/// Ask, per aggregate parameter, whether the returned pointer points into
/// it. The first Yes removes the return-value AllocSource. Backend errors
/// leave the annotation as it was.
pub fn post_filter(
    annotation: FunctionAnnotation,
    function: &FunctionRecord,
    callees: &[&FunctionRecord],
    cx: &PostFilterContext<'_>,
) -> PostFilterOutcome {
    let mut out = PostFilterOutcome {
        annotation,
        diagnostics: Vec::new(),
        queries: 0,
        removed: false,
    };
    if out.annotation.provenance != Provenance::Llm || !out.annotation.has_return_alloc() {
        return out;
    }
    let params = struct_params(function, cx.aggregates);
    if params.is_empty() {
        return out;
    }
    let mut failed = false;
    for (var, structure) in params {
        let prompt = match cx.prompts.render_postfilter(function, callees, &structure, &var) {
            Ok(p) => p,
            Err(e) => {
                out.diagnostics.push(format!("{}: {e}", function.name));
                failed = true;
                continue;
            }
        };
        out.queries += 1;
        let raw = match cx.client.complete(&prompt, cx.generation) {
            Ok(r) => r,
            Err(e) => {
                out.diagnostics
                    .push(format!("{}: post-filter query for {var}: {e}", function.name));
                failed = true;
                continue;
            }
        };
        match parse_postfilter_response(&raw).points_into_argument {
            Verdict::Yes => {
                out.annotation.entries.remove(&Slot::Return);
                out.annotation.provenance = Provenance::LlmPostFiltered;
                out.removed = true;
                return out;
            }
            Verdict::No => {}
            Verdict::Unparseable => out.diagnostics.push(format!(
                "{}: post-filter answer for {var} has no yes/no value",
                function.name
            )),
        }
    }
    if !failed {
        out.annotation.provenance = Provenance::LlmPostFiltered;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn aggs(v: &[&str]) -> BTreeSet<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn aggregate_detection() {
        let a = aggs(&["Pool", "cJSON"]);
        assert_eq!(pointed_aggregate("struct s_Chksum *", &a).as_deref(), Some("s_Chksum"));
        assert_eq!(
            pointed_aggregate("const struct node * const", &a).as_deref(),
            Some("node")
        );
        assert_eq!(pointed_aggregate("Pool *", &a).as_deref(), Some("Pool"));
        assert_eq!(pointed_aggregate("const cJSON * const", &a).as_deref(), Some("cJSON"));
        assert_eq!(pointed_aggregate("Pool", &a), None);
        assert_eq!(pointed_aggregate("struct s", &a), None);
        assert_eq!(pointed_aggregate("char *", &a), None);
        assert_eq!(pointed_aggregate("Other *", &a), None);
    }
}
