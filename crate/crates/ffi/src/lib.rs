//! C interface.
//!
//! Objects cross the boundary as opaque handles that the caller releases
//! with the matching `*_free` function. Every call returns a
//! [`MemannoStatus`]; on failure `memanno_last_error` describes the problem
//! for the calling thread. Strings handed out by this library must be
//! released with `memanno_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use memanno::annotate::{annotate_by_heuristic, AnnotationSet, Qualifiers};
use memanno::emit::{emit_codeql_models, emit_cooddy};
use memanno::evaluate::{ground_truth_from_set, score};
use memanno::ingest::{Corpus, ScanOptions};
use memanno::leakcheck::{check_corpus, Builtins};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemannoStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Corpus = 3,
    Parse = 4,
    Emit = 5,
    Io = 6,
    Panic = 7,
}

/// Scoring result. `precision` and `recall` are NaN when undefined.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct MemannoScore {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
}

pub struct MemannoCorpus {
    inner: Corpus,
}

pub struct MemannoAnnotations {
    inner: AnnotationSet,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let c = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Fail(MemannoStatus, String);

type FfiResult = Result<(), Fail>;

fn guard(f: impl FnOnce() -> FfiResult) -> MemannoStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MemannoStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal error: {msg}"));
            MemannoStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(MemannoStatus::NullArgument, format!("{what} is NULL"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(MemannoStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn out_string(out: *mut *mut c_char, s: String) -> FfiResult {
    let c = CString::new(s).map_err(|_| Fail(MemannoStatus::Emit, "output contains a NUL byte".into()))?;
    *out = c.into_raw();
    Ok(())
}

unsafe fn put<T>(out: *mut *mut T, v: T) -> FfiResult {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(v));
    Ok(())
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn memanno_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or NULL. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn memanno_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn memanno_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Scan and extract the C sources under `root` with default options.
///
/// # Safety
/// `root` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn memanno_corpus_scan(root: *const c_char, out: *mut *mut MemannoCorpus) -> MemannoStatus {
    guard(|| {
        let root = str_arg(root, "root")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let corpus = Corpus::load(Path::new(root), &ScanOptions::default())
            .map_err(|e| Fail(MemannoStatus::Corpus, e.to_string()))?;
        put(out, MemannoCorpus { inner: corpus })
    })
}

/// Number of extracted functions; 0 for NULL.
///
/// # Safety
/// `corpus` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn memanno_corpus_function_count(corpus: *const MemannoCorpus) -> usize {
    corpus.as_ref().map_or(0, |c| c.inner.functions.len())
}

/// # Safety
/// `corpus` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn memanno_corpus_free(corpus: *mut MemannoCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn memanno_annotations_load(
    path: *const c_char,
    out: *mut *mut MemannoAnnotations,
) -> MemannoStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let set = AnnotationSet::load(Path::new(path)).map_err(|e| match e {
            memanno::annotate::SetError::Io { .. } => Fail(MemannoStatus::Io, e.to_string()),
            _ => Fail(MemannoStatus::Parse, e.to_string()),
        })?;
        put(out, MemannoAnnotations { inner: set })
    })
}

/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn memanno_annotations_from_json(
    json: *const c_char,
    out: *mut *mut MemannoAnnotations,
) -> MemannoStatus {
    guard(|| {
        let json = str_arg(json, "json")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let set = AnnotationSet::from_json(json).map_err(|e| Fail(MemannoStatus::Parse, e.to_string()))?;
        put(out, MemannoAnnotations { inner: set })
    })
}

/// Name-and-signature heuristic over a corpus.
///
/// # Safety
/// `corpus` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn memanno_annotations_heuristic(
    corpus: *const MemannoCorpus,
    out: *mut *mut MemannoAnnotations,
) -> MemannoStatus {
    guard(|| {
        let corpus = corpus.as_ref().ok_or_else(|| null("corpus"))?;
        let set = annotate_by_heuristic(&corpus.inner.functions, &Qualifiers::default());
        put(out, MemannoAnnotations { inner: set })
    })
}

/// Number of annotated functions; 0 for NULL.
///
/// # Safety
/// `set` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn memanno_annotations_len(set: *const MemannoAnnotations) -> usize {
    set.as_ref().map_or(0, |s| s.inner.len())
}

/// # Safety
/// `set` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn memanno_annotations_free(set: *mut MemannoAnnotations) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Cooddy JSON. Arities come from `corpus` when given, otherwise from the
/// annotation file.
///
/// # Safety
/// `set` must be a live handle, `corpus` NULL or a live handle, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn memanno_emit_cooddy(
    set: *const MemannoAnnotations,
    corpus: *const MemannoCorpus,
    out: *mut *mut c_char,
) -> MemannoStatus {
    guard(|| {
        let set = set.as_ref().ok_or_else(|| null("set"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let arities = corpus.as_ref().map(|c| c.inner.arities()).unwrap_or_default();
        let text = emit_cooddy(&set.inner, &arities).map_err(|e| Fail(MemannoStatus::Emit, e.to_string()))?;
        out_string(out, text)
    })
}

/// CodeQL allocation model table. `dropped` may be NULL.
///
/// # Safety
/// `set` must be a live handle, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn memanno_emit_codeql(
    set: *const MemannoAnnotations,
    out: *mut *mut c_char,
    dropped: *mut usize,
) -> MemannoStatus {
    guard(|| {
        let set = set.as_ref().ok_or_else(|| null("set"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let m = emit_codeql_models(&set.inner);
        if !dropped.is_null() {
            *dropped = m.dropped;
        }
        out_string(out, m.text)
    })
}

/// Score `predicted` against `ground_truth`.
///
/// # Safety
/// Both sets must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn memanno_score(
    predicted: *const MemannoAnnotations,
    ground_truth: *const MemannoAnnotations,
    strict_slots: bool,
    out: *mut MemannoScore,
) -> MemannoStatus {
    guard(|| {
        let p = predicted.as_ref().ok_or_else(|| null("predicted"))?;
        let g = ground_truth.as_ref().ok_or_else(|| null("ground_truth"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let gt = ground_truth_from_set(g.inner.clone()).map_err(|e| Fail(MemannoStatus::Parse, e.to_string()))?;
        let r = score(&p.inner, &gt, strict_slots);
        *out = MemannoScore {
            tp: r.tp,
            fp: r.fp,
            fn_: r.fn_,
            precision: r.precision.unwrap_or(f64::NAN),
            recall: r.recall.unwrap_or(f64::NAN),
        };
        Ok(())
    })
}

/// Leak check with the stock builtin table. `set` may be NULL for a run
/// without annotations. The JSON report goes to `report` (may be NULL) and
/// the warning count to `total` (may be NULL).
///
/// # Safety
/// `corpus` must be a live handle, `set` NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn memanno_check(
    corpus: *const MemannoCorpus,
    set: *const MemannoAnnotations,
    report: *mut *mut c_char,
    total: *mut usize,
) -> MemannoStatus {
    guard(|| {
        let corpus = corpus.as_ref().ok_or_else(|| null("corpus"))?;
        let r = check_corpus(
            &corpus.inner.functions,
            set.as_ref().map(|s| &s.inner),
            &Builtins::stock(),
        );
        if !total.is_null() {
            *total = r.total;
        }
        if !report.is_null() {
            out_string(report, r.to_json())?;
        }
        Ok(())
    })
}
