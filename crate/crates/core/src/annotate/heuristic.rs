use super::types::{AnnotationSet, FunctionAnnotation, Kind, Metadata, Provenance, Qualifiers, Slot};
use crate::ingest::FunctionRecord;

const UNSIGNED_TYPES: [&str; 10] = [
    "size_t",
    "unsigned",
    "unsigned int",
    "unsigned long",
    "unsigned long long",
    "uint8_t",
    "uint16_t",
    "uint32_t",
    "uint64_t",
    "uintptr_t",
];

fn unqualified(type_text: &str) -> String {
    type_text
        .split_whitespace()
        .filter(|w| !matches!(*w, "const" | "volatile"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Baseline allocator detector: "alloc" in the name, a pointer return type
/// and a single unsigned integer parameter.
pub fn codeql_name_heuristic(function: &FunctionRecord) -> bool {
    function.name.to_ascii_lowercase().contains("alloc")
        && function.return_type_text.contains('*')
        && function.params.len() == 1
        && UNSIGNED_TYPES.contains(&unqualified(&function.params[0].type_text).as_str())
}

/// Return-value AllocSource for every function the heuristic accepts. The
/// first definition of a name wins.
pub fn annotate_by_heuristic(functions: &[FunctionRecord], qualifiers: &Qualifiers) -> AnnotationSet {
    let mut set = AnnotationSet::new(Metadata {
        generator: format!("memanno {} name-heuristic", env!("CARGO_PKG_VERSION")),
        model: None,
        timestamp: None,
    });
    for f in functions.iter().filter(|f| f.is_definition && codeql_name_heuristic(f)) {
        let mut a = FunctionAnnotation::new(Some(f.id.clone()), Provenance::NameHeuristic, Some(f.arity()));
        a.entries.insert(Slot::Return, qualifiers.of(Kind::AllocSource));
        set.insert(f.name.clone(), a);
    }
    set
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{extract_from_source, ExtractOptions};

    fn h(src: &str) -> bool {
        let fs = extract_from_source("t.c", src, &ExtractOptions::default()).functions;
        codeql_name_heuristic(&fs[0])
    }

    #[test]
    fn conditions() {
        assert!(h("void *my_alloc(size_t n) { return 0; }"));
        assert!(h("char *XAlloc(const unsigned long n) { return 0; }"));
        assert!(!h("void *my_alloc(int n) { return 0; }"));
        assert!(!h("int my_alloc(size_t n) { return 0; }"));
        assert!(!h("void *my_alloc(size_t n, size_t m) { return 0; }"));
        assert!(!h("void *my_alloc(void) { return 0; }"));
        assert!(!h("void *make(size_t n) { return 0; }"));
    }
}
