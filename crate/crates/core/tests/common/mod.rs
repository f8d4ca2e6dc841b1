#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use memanno::annotate::{AnnotationSet, FunctionAnnotation, Kind, Metadata, Provenance, Qualifiers, Slot};
use memanno::ingest::{extract_from_source, ExtractOptions, FunctionRecord};
use proptest::prelude::*;

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

pub fn functions(file: &str, src: &str) -> Vec<FunctionRecord> {
    extract_from_source(file, src, &ExtractOptions::default()).functions
}

/// Set with one entry per function: Return AllocSource for `allocs`,
/// Param(1) FreeSink for `frees`.
pub fn set_of(allocs: &[&str], frees: &[&str]) -> AnnotationSet {
    let q = Qualifiers::default();
    let mut s = AnnotationSet::new(Metadata::default());
    for n in allocs {
        let mut a = FunctionAnnotation::new(None, Provenance::Manual, Some(1));
        a.entries.insert(Slot::Return, q.of(Kind::AllocSource));
        s.insert(*n, a);
    }
    for n in frees {
        let mut a = FunctionAnnotation::new(None, Provenance::Manual, Some(1));
        a.entries.insert(Slot::Param(1), q.of(Kind::FreeSink));
        s.insert(*n, a);
    }
    s
}

// Random function bodies over three pointer variables, custom allocators
// a0..a3 and custom freers f0..f2.

pub const ALLOCATORS: [&str; 4] = ["a0", "a1", "a2", "a3"];
pub const FREERS: [&str; 3] = ["f0", "f1", "f2"];
const VARS: [&str; 3] = ["p0", "p1", "p2"];

#[derive(Debug, Clone)]
pub enum Stmt {
    Alloc(usize, usize),
    Malloc(usize),
    Free(usize, usize),
    Use(usize),
    Return(Option<usize>),
    NullReturn(usize),
    If(usize, Vec<Stmt>, Option<Vec<Stmt>>),
}

fn leaf() -> impl Strategy<Value = Stmt> {
    prop_oneof![
        4 => (0..3usize, 0..4usize).prop_map(|(v, a)| Stmt::Alloc(v, a)),
        1 => (0..3usize).prop_map(Stmt::Malloc),
        3 => (0..3usize, 0..3usize).prop_map(|(v, f)| Stmt::Free(v, f)),
        1 => (0..3usize).prop_map(Stmt::Use),
        1 => proptest::option::of(0..3usize).prop_map(Stmt::Return),
        1 => (0..3usize).prop_map(Stmt::NullReturn),
    ]
}

pub fn stmt() -> impl Strategy<Value = Stmt> {
    leaf().prop_recursive(2, 24, 4, |inner| {
        (
            0..3usize,
            proptest::collection::vec(inner.clone(), 1..4),
            proptest::option::of(proptest::collection::vec(inner, 1..4)),
        )
            .prop_map(|(c, t, e)| Stmt::If(c, t, e))
    })
}

fn render(s: &Stmt, indent: usize, out: &mut String) {
    let pad = "    ".repeat(indent);
    match s {
        Stmt::Alloc(v, a) => out.push_str(&format!("{pad}{} = {}(16);\n", VARS[*v], ALLOCATORS[*a])),
        Stmt::Malloc(v) => out.push_str(&format!("{pad}{} = malloc(16);\n", VARS[*v])),
        Stmt::Free(v, f) => out.push_str(&format!("{pad}{}({});\n", FREERS[*f], VARS[*v])),
        Stmt::Use(v) => out.push_str(&format!("{pad}use({});\n", VARS[*v])),
        Stmt::Return(None) => out.push_str(&format!("{pad}return 0;\n")),
        Stmt::Return(Some(v)) => out.push_str(&format!("{pad}return {};\n", VARS[*v])),
        Stmt::NullReturn(v) => out.push_str(&format!("{pad}if (!{})\n{pad}    return 0;\n", VARS[*v])),
        Stmt::If(c, t, e) => {
            out.push_str(&format!("{pad}if (n > {c}) {{\n"));
            t.iter().for_each(|s| render(s, indent + 1, out));
            match e {
                Some(e) => {
                    out.push_str(&format!("{pad}}} else {{\n"));
                    e.iter().for_each(|s| render(s, indent + 1, out));
                    out.push_str(&format!("{pad}}}\n"));
                }
                None => out.push_str(&format!("{pad}}}\n")),
            }
        }
    }
}

pub fn render_function(body: &[Stmt]) -> String {
    let mut s = String::from("void *gen(int n)\n{\n    void *p0 = 0, *p1 = 0, *p2 = 0;\n");
    body.iter().for_each(|st| render(st, 1, &mut s));
    s.push_str("    return 0;\n}\n");
    s
}

pub fn body() -> impl Strategy<Value = Vec<Stmt>> {
    proptest::collection::vec(stmt(), 1..8)
}

/// Subset of `names` chosen by `mask` bits.
pub fn pick<'a>(names: &[&'a str], mask: u8) -> Vec<&'a str> {
    names
        .iter()
        .enumerate()
        .filter(|(i, _)| mask & (1 << i) != 0)
        .map(|(_, n)| *n)
        .collect()
}

/// Minimal OpenAI-compatible chat server. Every request is answered with
/// `reply` as the message content. Counts the requests it serves.
pub struct ChatServer {
    pub url: String,
    pub requests: Arc<AtomicUsize>,
}

impl ChatServer {
    pub fn start(reply: &str) -> ChatServer {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind");
        let url = format!("http://{}/v1", listener.local_addr().unwrap());
        let requests = Arc::new(AtomicUsize::new(0));
        let counter = requests.clone();
        let body = serde_json::json!({"choices": [{"message": {"role": "assistant", "content": reply}}]}).to_string();
        std::thread::spawn(move || {
            for conn in listener.incoming().flatten() {
                let counter = counter.clone();
                let body = body.clone();
                std::thread::spawn(move || serve(conn, &body, &counter));
            }
        });
        ChatServer { url, requests }
    }

    pub fn count(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }
}

fn serve(conn: TcpStream, body: &str, counter: &AtomicUsize) {
    let mut writer = conn.try_clone().expect("clone stream");
    let mut reader = BufReader::new(conn);
    loop {
        let mut len = 0usize;
        let mut line = String::new();
        let mut first = true;
        loop {
            line.clear();
            if reader.read_line(&mut line).unwrap_or(0) == 0 {
                return;
            }
            if first {
                first = false;
                continue;
            }
            let l = line.trim_end();
            if l.is_empty() {
                break;
            }
            if let Some((k, v)) = l.split_once(':') {
                if k.eq_ignore_ascii_case("content-length") {
                    len = v.trim().parse().unwrap_or(0);
                }
            }
        }
        let mut buf = vec![0; len];
        if reader.read_exact(&mut buf).is_err() {
            return;
        }
        counter.fetch_add(1, Ordering::SeqCst);
        let resp = format!(
            "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n{body}",
            body.len()
        );
        if writer.write_all(resp.as_bytes()).is_err() {
            return;
        }
    }
}
