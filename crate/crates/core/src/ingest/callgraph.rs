use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use super::extract::{FunctionId, FunctionRecord, TYPE_WORDS};
use super::lexer::{tokenize, Token, TokenKind};
use super::IngestError;

const CALL_KEYWORDS: [&str; 10] = [
    "if",
    "while",
    "for",
    "switch",
    "return",
    "sizeof",
    "_Alignof",
    "alignof",
    "__attribute__",
    "defined",
];

/// Index of the `{` opening the function body, skipping the header.
pub(crate) fn body_open(toks: &[Token]) -> Option<usize> {
    let mut paren = 0i32;
    toks.iter().position(|t| {
        if t.is_punct("(") {
            paren += 1;
        } else if t.is_punct(")") {
            paren -= 1;
        }
        paren == 0 && t.is_punct("{")
    })
}

/// Names that appear in call position inside the function body, in order of
/// first occurrence. Member calls (`a->f(x)`, `a.f(x)`) are not included.
pub fn called_names(function: &FunctionRecord) -> Vec<String> {
    let toks = tokenize(&function.body);
    let Some(open) = body_open(&toks) else {
        return Vec::new();
    };
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for w in open..toks.len().saturating_sub(1) {
        let (t, next) = (toks[w], toks[w + 1]);
        if t.kind != TokenKind::Ident || !next.is_punct("(") {
            continue;
        }
        if CALL_KEYWORDS.contains(&t.text) || TYPE_WORDS.contains(&t.text) {
            continue;
        }
        if w > 0 && (toks[w - 1].is_punct("->") || toks[w - 1].is_punct(".")) {
            continue;
        }
        if seen.insert(t.text) {
            out.push(t.text.to_string());
        }
    }
    out
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct CallGraph {
    pub nodes: BTreeSet<FunctionId>,
    pub edges: BTreeSet<(FunctionId, FunctionId)>,
    pub unresolved_calls: Vec<(FunctionId, String)>,
    /// Callees per caller in order of first call.
    #[serde(skip)]
    adjacency: BTreeMap<FunctionId, Vec<FunctionId>>,
}

impl CallGraph {
    pub fn callees(&self, id: &FunctionId) -> &[FunctionId] {
        self.adjacency.get(id).map_or(&[], Vec::as_slice)
    }

    pub fn contains(&self, id: &FunctionId) -> bool {
        self.nodes.contains(id)
    }

    /// Ids reachable within `depth` hops, breadth first, excluding `id`.
    pub fn callee_ids(&self, id: &FunctionId, depth: usize) -> Result<Vec<FunctionId>, IngestError> {
        if !self.nodes.contains(id) {
            return Err(IngestError::UnknownFunction(id.to_string()));
        }
        let mut seen: HashSet<&FunctionId> = HashSet::from([id]);
        let mut out = Vec::new();
        let mut queue: VecDeque<(&FunctionId, usize)> = VecDeque::from([(id, 0)]);
        while let Some((cur, d)) = queue.pop_front() {
            if d == depth {
                continue;
            }
            for next in self.callees(cur) {
                if seen.insert(next) {
                    out.push(next.clone());
                    queue.push_back((next, d + 1));
                }
            }
        }
        Ok(out)
    }
}

/// Build the caller/callee graph.
///
/// A call to a name with several definitions resolves to the definition in
/// the caller's own file when there is one, otherwise to all of them.
pub fn build_call_graph(functions: &[FunctionRecord]) -> CallGraph {
    let mut by_name: HashMap<&str, Vec<&FunctionRecord>> = HashMap::new();
    for f in functions {
        by_name.entry(f.name.as_str()).or_default().push(f);
    }
    let mut g = CallGraph {
        nodes: functions.iter().map(|f| f.id.clone()).collect(),
        ..CallGraph::default()
    };
    for f in functions {
        let mut targets: Vec<FunctionId> = Vec::new();
        for name in called_names(f) {
            match by_name.get(name.as_str()) {
                Some(defs) => {
                    let same_file: Vec<_> = defs.iter().filter(|d| d.file == f.file).collect();
                    let chosen: Vec<&&FunctionRecord> = if same_file.is_empty() {
                        defs.iter().collect()
                    } else {
                        same_file
                    };
                    for d in chosen {
                        if g.edges.insert((f.id.clone(), d.id.clone())) {
                            targets.push(d.id.clone());
                        }
                    }
                }
                None => g.unresolved_calls.push((f.id.clone(), name)),
            }
        }
        g.adjacency.insert(f.id.clone(), targets);
    }
    g
}

/// Function records for `callee_ids`, in the same order.
pub fn callees_of<'a>(
    graph: &CallGraph,
    functions: &'a [FunctionRecord],
    id: &FunctionId,
    depth: usize,
) -> Result<Vec<&'a FunctionRecord>, IngestError> {
    let ids = graph.callee_ids(id, depth)?;
    let pos: HashMap<&FunctionId, &FunctionRecord> = functions.iter().map(|f| (&f.id, f)).collect();
    Ok(ids.iter().filter_map(|i| pos.get(i).copied()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::extract::{extract_from_source, ExtractOptions};

    fn funcs(file: &str, src: &str) -> Vec<FunctionRecord> {
        extract_from_source(file, src, &ExtractOptions::default()).functions
    }

    #[test]
    fn direct_and_external_calls() {
        let fs = funcs(
            "a.c",
            "int g(void) { return 1; }\nint f(void) { char *p = malloc(4); return g(); }\n",
        );
        let g = build_call_graph(&fs);
        let (gid, fid) = (fs[0].id.clone(), fs[1].id.clone());
        assert!(g.edges.contains(&(fid.clone(), gid)));
        assert_eq!(g.unresolved_calls, [(fid, "malloc".to_string())]);
    }

    #[test]
    fn ignores_strings_comments_members_and_keywords() {
        let fs = funcs(
            "a.c",
            "int g(int x) { return x; }\nint f(struct s *h) { /* g(1) */ const char *m = \"g(2)\"; if (h) h->g(3); return sizeof(int) + (int)(4); }\n",
        );
        let g = build_call_graph(&fs);
        assert!(g.edges.is_empty(), "{:?}", g.edges);
        assert!(g.unresolved_calls.is_empty(), "{:?}", g.unresolved_calls);
    }

    #[test]
    fn homonyms_prefer_same_file() {
        let mut fs = funcs("a.c", "static int h(void) { return 1; }\nint f(void) { return h(); }\n");
        fs.extend(funcs(
            "b.c",
            "static int h(void) { return 2; }\nint k(void) { return h(); }\n",
        ));
        fs.extend(funcs("c.c", "int m(void) { return h(); }\n"));
        let g = build_call_graph(&fs);
        let from = |caller: &str| -> Vec<String> {
            g.edges
                .iter()
                .filter(|(c, _)| c.as_str().starts_with(caller))
                .map(|(_, d)| d.to_string())
                .collect()
        };
        assert_eq!(from("a.c:f"), ["a.c:h:1"]);
        assert_eq!(from("b.c:k"), ["b.c:h:1"]);
        assert_eq!(from("c.c:m"), ["a.c:h:1", "b.c:h:1"]);
    }

    #[test]
    fn bfs_depths() {
        let fs = funcs(
            "a.c",
            "int h(void) { return 0; }\nint g(void) { return h(); }\nint f(void) { return g(); }\n",
        );
        let g = build_call_graph(&fs);
        let f = fs[2].id.clone();
        let names = |d| -> Vec<String> {
            callees_of(&g, &fs, &f, d)
                .unwrap()
                .iter()
                .map(|r| r.name.clone())
                .collect()
        };
        assert!(names(0).is_empty());
        assert_eq!(names(1), ["g"]);
        assert_eq!(names(2), ["g", "h"]);
        assert_eq!(names(5), ["g", "h"]);
    }

    #[test]
    fn recursion_is_a_single_self_edge_and_not_a_callee() {
        let fs = funcs("a.c", "int f(int n) { return n ? f(n - 1) + f(n - 2) : 0; }\n");
        let g = build_call_graph(&fs);
        assert_eq!(g.edges.len(), 1);
        assert!(callees_of(&g, &fs, &fs[0].id, 3).unwrap().is_empty());
    }

    #[test]
    fn unknown_id_is_an_error() {
        let g = build_call_graph(&[]);
        assert!(g.callee_ids(&FunctionId("x".into()), 1).is_err());
    }
}
