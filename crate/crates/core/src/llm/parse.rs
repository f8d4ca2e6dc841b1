use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::RawCompletion;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AllocationFindings {
    pub allocated_variables: Vec<String>,
    pub deallocated_variables: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Yes,
    No,
    Unparseable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PostFilterVerdict {
    pub points_into_argument: Verdict,
    pub raw: RawCompletion,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no JSON object in model output ({} bytes)", raw.len())]
pub struct NoJsonObject {
    pub raw: String,
}

/// The last top-level JSON object in `text`.
///
/// Scans left to right; after a successful parse the scan resumes behind the
/// object, so objects nested inside a larger one are never returned on their
/// own.
pub fn last_json_object(text: &str) -> Option<Map<String, Value>> {
    let mut last = None;
    let mut i = 0;
    while let Some(off) = text[i..].find('{') {
        let start = i + off;
        let mut it = serde_json::Deserializer::from_str(&text[start..]).into_iter::<Value>();
        match it.next() {
            Some(Ok(Value::Object(m))) => {
                last = Some(m);
                i = start + it.byte_offset();
            }
            _ => i = start + 1,
        }
    }
    last
}

fn is_ident(s: &str) -> bool {
    let mut c = s.chars();
    matches!(c.next(), Some(ch) if ch == '_' || ch.is_ascii_alphabetic())
        && c.all(|ch| ch == '_' || ch.is_ascii_alphanumeric())
}

fn normalize_name(s: &str) -> Option<String> {
    let cleaned: String = s
        .chars()
        .filter(|c| !matches!(c, '*' | '&' | '(' | ')') && !c.is_whitespace())
        .collect();
    is_ident(&cleaned).then_some(cleaned)
}

fn names(v: Option<&Value>) -> Vec<String> {
    let items: Vec<&Value> = match v {
        Some(Value::Array(a)) => a.iter().collect(),
        Some(s @ Value::String(_)) => vec![s],
        _ => Vec::new(),
    };
    let mut out: Vec<String> = Vec::new();
    for item in items {
        if let Some(n) = item.as_str().and_then(normalize_name) {
            if !out.contains(&n) {
                out.push(n);
            }
        }
    }
    out
}

/// Read the two answer fields from the last JSON object of a completion.
///
/// Entries that are not plain identifiers once `*`, `&`, parentheses and
/// whitespace are removed (`p->buf`, `a[0]`) are dropped.
pub fn parse_allocation_response(raw: &RawCompletion) -> Result<AllocationFindings, NoJsonObject> {
    let obj = last_json_object(&raw.text).ok_or_else(|| NoJsonObject { raw: raw.text.clone() })?;
    Ok(AllocationFindings {
        allocated_variables: names(obj.get("allocated_variables")),
        deallocated_variables: names(obj.get("deallocated_variables")),
    })
}

fn word_verdict(s: &str) -> Option<Verdict> {
    let t = s.trim();
    let lead: String = t.chars().take_while(|c| c.is_ascii_alphabetic()).collect();
    for cand in [lead.as_str(), t] {
        match cand.to_ascii_lowercase().as_str() {
            "yes" | "true" => return Some(Verdict::Yes),
            "no" | "false" => return Some(Verdict::No),
            _ => {}
        }
    }
    None
}

fn search(v: &Value) -> Option<Verdict> {
    match v {
        Value::Bool(true) => Some(Verdict::Yes),
        Value::Bool(false) => Some(Verdict::No),
        Value::String(s) => word_verdict(s),
        Value::Object(m) => m.values().find_map(search),
        Value::Array(a) => a.iter().find_map(search),
        _ => None,
    }
}

/// First boolean, or string whose leading word is yes/no/true/false, in
/// document order of the last JSON object. Anything else is `Unparseable`.
pub fn parse_postfilter_response(raw: &RawCompletion) -> PostFilterVerdict {
    let points_into_argument = last_json_object(&raw.text)
        .and_then(|m| m.values().find_map(search))
        .unwrap_or(Verdict::Unparseable);
    PostFilterVerdict {
        points_into_argument,
        raw: raw.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(t: &str) -> RawCompletion {
        RawCompletion {
            text: t.to_string(),
            backend_id: "test".into(),
            cached: false,
        }
    }

    #[test]
    fn last_object_wins_and_nested_objects_are_not_split_out() {
        let t = "first {\"a\": 1} then {\"b\": {\"c\": 2}} end";
        let m = last_json_object(t).unwrap();
        assert!(m.contains_key("b"));
        assert!(last_json_object("int f() { return 0; }").is_none());
    }

    #[test]
    fn names_are_normalized() {
        let f = parse_allocation_response(&raw(
            r#"{"allocated_variables": ["*p", "&q", " r ", "p", "s->buf", "(t)"], "deallocated_variables": "buf"}"#,
        ))
        .unwrap();
        assert_eq!(f.allocated_variables, ["p", "q", "r", "t"]);
        assert_eq!(f.deallocated_variables, ["buf"]);
    }

    #[test]
    fn missing_and_null_fields_are_empty() {
        let f = parse_allocation_response(&raw(r#"{"deallocated_variables": null}"#)).unwrap();
        assert_eq!(f, AllocationFindings::default());
    }

    #[test]
    fn verdict_words() {
        let v = |t: &str| parse_postfilter_response(&raw(t)).points_into_argument;
        assert_eq!(v(r#"{"answer": "yes"}"#), Verdict::Yes);
        assert_eq!(v(r#"{"answer": "FALSE"}"#), Verdict::No);
        assert_eq!(
            v(r#"{"explanation": "It returns a pointer", "answer": false}"#),
            Verdict::No
        );
        assert_eq!(v(r#"{"result": {"points_to_argument": true}}"#), Verdict::Yes);
        assert_eq!(v(r#"{"answer": "Nothing conclusive"}"#), Verdict::Unparseable);
        assert_eq!(v("yes"), Verdict::Unparseable);
    }
}
