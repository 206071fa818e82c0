//! C ABI over `legaldmn`.
//!
//! Graphs live behind an opaque [`LdmnGraph`] handle. Every fallible call
//! returns an [`LdmnStatus`]; on failure [`ldmn_last_error`] describes what
//! went wrong on the calling thread. Strings handed out by the library must
//! be released with [`ldmn_string_free`], graphs with [`ldmn_graph_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use legaldmn::engine::{Assignment, ExecMode, Executor};
use legaldmn::ingest::{deserialize_graph, load_graph, serialize_graph, CorpusOptions};
use legaldmn::outcome::{assess_testability, equivalence, generate_cases, TestabilityCaps};
use legaldmn::structeval::{graphlet_similarity, sp_similarity_with, GraphletOptions, SpOptions};
use legaldmn::validate::validate_graph;
use legaldmn::DecisionGraph;

/// Result codes. `LDMN_STATUS_OK` is zero; everything else is an error.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LdmnStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    Invalid = 5,
    Execution = 6,
    NotTestable = 7,
    Internal = 8,
}

/// Opaque decision graph.
pub struct LdmnGraph {
    graph: DecisionGraph,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(LdmnStatus, String);

fn fail(status: LdmnStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> LdmnStatus {
    match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            LdmnStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            LdmnStatus::Internal
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(LdmnStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(LdmnStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn graph<'a>(p: *const LdmnGraph, what: &str) -> Result<&'a DecisionGraph, Failure> {
    p.as_ref()
        .map(|h| &h.graph)
        .ok_or_else(|| fail(LdmnStatus::NullArgument, format!("{what} is null")))
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(fail(LdmnStatus::NullArgument, "output pointer is null"));
    }
    out.write(value);
    Ok(())
}

fn owned_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| fail(LdmnStatus::Internal, "string contains NUL"))
}

fn boxed(graph: DecisionGraph) -> *mut LdmnGraph {
    Box::into_raw(Box::new(LdmnGraph { graph }))
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn ldmn_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn ldmn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a DMN file (`.dmn`/`.xml`) or a compact `.json` graph.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ldmn_graph_load(path: *const c_char, out: *mut *mut LdmnGraph) -> LdmnStatus {
    guard(|| {
        let path = text(path, "path")?;
        let p = Path::new(path);
        if !p.is_file() {
            return Err(fail(LdmnStatus::Io, format!("{path}: no such file")));
        }
        let g = load_graph(p, &CorpusOptions::default()).map_err(|e| fail(LdmnStatus::Parse, e))?;
        put(out, boxed(g))
    })
}

/// Parses a graph from compact JSON.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ldmn_graph_from_json(json: *const c_char, out: *mut *mut LdmnGraph) -> LdmnStatus {
    guard(|| {
        let json = text(json, "json")?;
        let g = deserialize_graph(json.as_bytes()).map_err(|e| fail(LdmnStatus::Parse, e.to_string()))?;
        put(out, boxed(g))
    })
}

/// Serializes a graph to compact JSON; free the result with `ldmn_string_free`.
///
/// # Safety
/// `g` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ldmn_graph_to_json(g: *const LdmnGraph, out: *mut *mut c_char) -> LdmnStatus {
    guard(|| {
        let g = graph(g, "graph")?;
        let s = String::from_utf8(serialize_graph(g)).map_err(|e| fail(LdmnStatus::Internal, e.to_string()))?;
        put(out, owned_string(s)?)
    })
}

/// Checks structural validity. Returns `LDMN_STATUS_INVALID` with every violation in
/// the error message when the graph is not well formed.
///
/// # Safety
/// `g` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn ldmn_graph_validate(g: *const LdmnGraph) -> LdmnStatus {
    guard(|| {
        let report = validate_graph(graph(g, "graph")?);
        if report.is_ok() {
            Ok(())
        } else {
            Err(fail(LdmnStatus::Invalid, report.to_string()))
        }
    })
}

/// Executes the graph on a JSON object mapping input ids to values. Writes
/// the execution result as JSON (`output_value`, `node_values`, `errors`).
///
/// # Safety
/// `g` must come from this library, `assignment` must be a NUL-terminated
/// string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ldmn_execute(
    g: *const LdmnGraph,
    assignment: *const c_char,
    strict: bool,
    out: *mut *mut c_char,
) -> LdmnStatus {
    guard(|| {
        let g = graph(g, "graph")?;
        let a: Assignment = serde_json::from_str(text(assignment, "assignment")?)
            .map_err(|e| fail(LdmnStatus::Parse, e.to_string()))?;
        let ex = Executor::new(g).map_err(|e| fail(LdmnStatus::Invalid, e.to_string()))?;
        let mode = if strict { ExecMode::Strict } else { ExecMode::Permissive };
        let r = ex
            .execute(&a, mode)
            .map_err(|e| fail(LdmnStatus::Execution, e.to_string()))?;
        let json = serde_json::to_string(&r).map_err(|e| fail(LdmnStatus::Internal, e.to_string()))?;
        put(out, owned_string(json)?)
    })
}

/// Normalized shortest-path kernel similarity.
///
/// # Safety
/// `a` and `b` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ldmn_sp_similarity(
    a: *const LdmnGraph,
    b: *const LdmnGraph,
    directed: bool,
    out: *mut f64,
) -> LdmnStatus {
    guard(|| {
        let s = sp_similarity_with(graph(a, "a")?, graph(b, "b")?, SpOptions { directed });
        put(out, s)
    })
}

/// Normalized graphlet kernel similarity over sizes 3 to 5. `seed` only
/// matters for graphs large enough to be sampled.
///
/// # Safety
/// `a` and `b` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ldmn_graphlet_similarity(
    a: *const LdmnGraph,
    b: *const LdmnGraph,
    seed: u64,
    out: *mut f64,
) -> LdmnStatus {
    guard(|| {
        let opts = GraphletOptions {
            seed,
            ..GraphletOptions::default()
        };
        let s = graphlet_similarity(graph(a, "a")?, graph(b, "b")?, &opts)
            .map_err(|e| fail(LdmnStatus::Internal, e.to_string()))?;
        put(out, s)
    })
}

/// Fraction of exhaustively generated gold test cases on which the candidate
/// produces the gold outcome. An invalid candidate scores 0; an invalid gold
/// model fails with `LDMN_STATUS_INVALID`. Fails with `LDMN_STATUS_NOT_TESTABLE` when the gold
/// model is outside the default testability caps.
///
/// # Safety
/// `gold` and `candidate` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ldmn_equivalence_rate(
    gold: *const LdmnGraph,
    candidate: *const LdmnGraph,
    out: *mut f64,
) -> LdmnStatus {
    guard(|| {
        let gold = graph(gold, "gold")?;
        let candidate = graph(candidate, "candidate")?;
        let report = validate_graph(gold);
        if !report.is_ok() {
            return Err(fail(LdmnStatus::Invalid, format!("gold model: {report}")));
        }
        let verdict = assess_testability(gold, &TestabilityCaps::default());
        if !verdict.eligible {
            return Err(fail(
                LdmnStatus::NotTestable,
                format!("{}: {:?}", gold.id, verdict.reason),
            ));
        }
        let r = equivalence(gold, candidate, &generate_cases(&verdict.domains));
        put(out, r.rate)
    })
}

/// Releases a graph. Null is ignored.
///
/// # Safety
/// `g` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ldmn_graph_free(g: *mut LdmnGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ldmn_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
