//! Prompt templates and rendering.
//!
//! The two stock templates live in `assets/prompts/` and are compiled in; a
//! directory holding `initial.txt` and/or `postfilter.txt` can replace them.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::ingest::{FunctionId, FunctionRecord};

const INITIAL_TEMPLATE: &str = include_str!("../assets/prompts/initial.txt");
const POSTFILTER_TEMPLATE: &str = include_str!("../assets/prompts/postfilter.txt");

/// Separator between concatenated function bodies: one blank line.
pub const BODY_SEPARATOR: &str = "\n\n";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptKind {
    Initial,
    #[serde(rename = "postfilter")]
    PostFilter,
}

impl PromptKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PromptKind::Initial => "initial",
            PromptKind::PostFilter => "postfilter",
        }
    }

    fn placeholders(self) -> &'static [&'static str] {
        match self {
            PromptKind::Initial => &["func_name", "code"],
            PromptKind::PostFilter => &["func_name", "structure", "variable_name", "source"],
        }
    }

    fn file_name(self) -> &'static str {
        match self {
            PromptKind::Initial => "initial.txt",
            PromptKind::PostFilter => "postfilter.txt",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PromptText {
    pub text: String,
    pub kind: PromptKind,
    pub function_id: FunctionId,
    /// Name of the target function. Not part of the prompt identity; the mock
    /// backend uses it to look up fixtures.
    pub function_name: String,
}

#[derive(Debug, thiserror::Error)]
pub enum PromptError {
    #[error("cannot read template {path}: {message}")]
    Io { path: String, message: String },
    #[error("{kind} template: unknown placeholder {{{name}}}")]
    UnknownPlaceholder { kind: &'static str, name: String },
    #[error("{kind} template: missing placeholder {{{name}}}")]
    MissingPlaceholder { kind: &'static str, name: String },
    #[error("'{variable}' is not a parameter of {function}")]
    NotAParam { function: String, variable: String },
    #[error("post-filter {0} must be non-empty")]
    Empty(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment {
    Lit(String),
    Hole(&'static str),
}

#[derive(Debug, Clone)]
pub struct PromptTemplate {
    kind: PromptKind,
    source: String,
    segments: Vec<Segment>,
}

impl PromptTemplate {
    /// Parse a template. `{name}` with a lowercase identifier inside is a
    /// placeholder; any other brace is literal text.
    pub fn parse(kind: PromptKind, text: &str) -> Result<Self, PromptError> {
        let allowed = kind.placeholders();
        let mut segments = Vec::new();
        let mut lit = String::new();
        let mut rest = text;
        while let Some(open) = rest.find('{') {
            lit.push_str(&rest[..open]);
            let after = &rest[open + 1..];
            let close = after.find('}');
            let name = close
                .map(|c| &after[..c])
                .filter(|n| !n.is_empty() && n.bytes().all(|b| b.is_ascii_lowercase() || b == b'_'));
            match name {
                Some(n) => {
                    let Some(&hole) = allowed.iter().find(|a| **a == n) else {
                        return Err(PromptError::UnknownPlaceholder {
                            kind: kind.as_str(),
                            name: n.to_string(),
                        });
                    };
                    if !lit.is_empty() {
                        segments.push(Segment::Lit(std::mem::take(&mut lit)));
                    }
                    segments.push(Segment::Hole(hole));
                    rest = &after[n.len() + 1..];
                }
                None => {
                    lit.push('{');
                    rest = after;
                }
            }
        }
        lit.push_str(rest);
        if !lit.is_empty() {
            segments.push(Segment::Lit(lit));
        }
        for name in allowed {
            if !segments.contains(&Segment::Hole(name)) {
                return Err(PromptError::MissingPlaceholder {
                    kind: kind.as_str(),
                    name: name.to_string(),
                });
            }
        }
        Ok(PromptTemplate {
            kind,
            source: text.to_string(),
            segments,
        })
    }

    pub fn builtin(kind: PromptKind) -> Self {
        let text = match kind {
            PromptKind::Initial => INITIAL_TEMPLATE,
            PromptKind::PostFilter => POSTFILTER_TEMPLATE,
        };
        Self::parse(kind, text).expect("stock template is valid")
    }

    pub fn load(kind: PromptKind, path: &Path) -> Result<Self, PromptError> {
        let text = std::fs::read_to_string(path).map_err(|e| PromptError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(kind, &text)
    }

    pub fn kind(&self) -> PromptKind {
        self.kind
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Placeholders in order of appearance, repeats included.
    pub fn placeholders(&self) -> Vec<&'static str> {
        self.segments
            .iter()
            .filter_map(|s| match s {
                Segment::Hole(h) => Some(*h),
                Segment::Lit(_) => None,
            })
            .collect()
    }

    /// Single pass: substituted values are never rescanned for placeholders.
    fn fill(&self, value: impl Fn(&str) -> String) -> String {
        let mut out = String::new();
        for s in &self.segments {
            match s {
                Segment::Lit(l) => out.push_str(l),
                Segment::Hole(h) => out.push_str(&value(h)),
            }
        }
        out
    }
}

fn join_bodies<'a>(bodies: impl Iterator<Item = &'a str>) -> String {
    bodies
        .map(|b| b.trim_end_matches(['\n', '\r']))
        .collect::<Vec<_>>()
        .join(BODY_SEPARATOR)
}

#[derive(Debug, Clone)]
pub struct PromptSet {
    pub initial: PromptTemplate,
    pub postfilter: PromptTemplate,
}

impl Default for PromptSet {
    fn default() -> Self {
        PromptSet {
            initial: PromptTemplate::builtin(PromptKind::Initial),
            postfilter: PromptTemplate::builtin(PromptKind::PostFilter),
        }
    }
}

impl PromptSet {
    /// Stock templates, with any of `initial.txt` / `postfilter.txt` found in
    /// `dir` taking their place.
    pub fn from_dir(dir: &Path) -> Result<Self, PromptError> {
        if !dir.is_dir() {
            return Err(PromptError::Io {
                path: dir.display().to_string(),
                message: "not a directory".into(),
            });
        }
        let mut set = PromptSet::default();
        for kind in [PromptKind::Initial, PromptKind::PostFilter] {
            let p = dir.join(kind.file_name());
            if p.exists() {
                let t = PromptTemplate::load(kind, &p)?;
                match kind {
                    PromptKind::Initial => set.initial = t,
                    PromptKind::PostFilter => set.postfilter = t,
                }
            }
        }
        Ok(set)
    }

    pub fn render_initial(&self, function: &FunctionRecord, context: &[&FunctionRecord]) -> PromptText {
        let code = join_bodies(
            context
                .iter()
                .map(|c| c.body.as_str())
                .chain(std::iter::once(function.body.as_str())),
        );
        let text = self.initial.fill(|h| match h {
            "func_name" => function.name.clone(),
            _ => code.clone(),
        });
        PromptText {
            text,
            kind: PromptKind::Initial,
            function_id: function.id.clone(),
            function_name: function.name.clone(),
        }
    }

    pub fn render_postfilter(
        &self,
        function: &FunctionRecord,
        context: &[&FunctionRecord],
        structure: &str,
        variable_name: &str,
    ) -> Result<PromptText, PromptError> {
        if structure.trim().is_empty() {
            return Err(PromptError::Empty("structure"));
        }
        if variable_name.trim().is_empty() {
            return Err(PromptError::Empty("variable name"));
        }
        if function.param_index(variable_name).is_none() {
            return Err(PromptError::NotAParam {
                function: function.name.clone(),
                variable: variable_name.to_string(),
            });
        }
        let source =
            join_bodies(std::iter::once(function.body.as_str()).chain(context.iter().map(|c| c.body.as_str())));
        let text = self.postfilter.fill(|h| match h {
            "func_name" => function.name.clone(),
            "structure" => structure.to_string(),
            "variable_name" => variable_name.to_string(),
            _ => source.clone(),
        });
        Ok(PromptText {
            text,
            kind: PromptKind::PostFilter,
            function_id: function.id.clone(),
            function_name: function.name.clone(),
        })
    }
}

/// Render the allocation question with the stock template. Context bodies
/// come first, then the target.
pub fn render_initial_prompt(function: &FunctionRecord, context: &[&FunctionRecord]) -> PromptText {
    PromptSet::default().render_initial(function, context)
}

/// Render the post-filter question with the stock template. The target body
/// comes first, then the context.
pub fn render_postfilter_prompt(
    function: &FunctionRecord,
    context: &[&FunctionRecord],
    structure: &str,
    variable_name: &str,
) -> Result<PromptText, PromptError> {
    PromptSet::default().render_postfilter(function, context, structure, variable_name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{extract_from_source, ExtractOptions};

    fn funcs(src: &str) -> Vec<FunctionRecord> {
        extract_from_source("t.c", src, &ExtractOptions::default()).functions
    }

    #[test]
    fn stock_templates_parse() {
        let t = PromptTemplate::builtin(PromptKind::Initial);
        assert_eq!(t.placeholders(), ["func_name", "func_name", "code"]);
        let t = PromptTemplate::builtin(PromptKind::PostFilter);
        assert_eq!(t.placeholders(), ["func_name", "structure", "variable_name", "source"]);
    }

    #[test]
    fn literal_braces_survive() {
        let t = PromptTemplate::parse(PromptKind::Initial, "{func_name} {} {X} {code}{").unwrap();
        assert_eq!(t.placeholders(), ["func_name", "code"]);
        let fs = funcs("int f(void) { return 0; }\n");
        let p = PromptSet {
            initial: t,
            ..PromptSet::default()
        }
        .render_initial(&fs[0], &[]);
        assert_eq!(p.text, "f {} {X} int f(void) { return 0; }{");
    }

    #[test]
    fn template_validation() {
        assert!(matches!(
            PromptTemplate::parse(PromptKind::Initial, "{func_name}"),
            Err(PromptError::MissingPlaceholder { .. })
        ));
        assert!(matches!(
            PromptTemplate::parse(PromptKind::Initial, "{func_name}{code}{source}"),
            Err(PromptError::UnknownPlaceholder { .. })
        ));
    }

    #[test]
    fn substituted_text_is_not_rescanned() {
        let fs = funcs("int f(void) { const char *s = \"{code}\"; return 0; }\n");
        let p = render_initial_prompt(&fs[0], &[]);
        assert_eq!(p.text.matches("{code}").count(), 1);
    }
}
