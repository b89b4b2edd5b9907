//! C ABI for the relvec library: opaque handles, integer status codes, and
//! JSON/TSV string results so other languages can bind without knowing the
//! Rust types.
//!
//! Conventions:
//! - Every fallible call returns an [`RvStatus`]; on anything but `RV_OK` a
//!   description is available from `rv_last_error_message` (thread-local,
//!   valid until the next call on the same thread).
//! - Strings returned through `char **` out-parameters are heap-allocated
//!   and must be released with `rv_string_free`.
//! - Handles from `rv_store_open` / `rv_kb_open` must be released with the
//!   matching `_free` function exactly once.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::{c_char, c_int};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use relvec::embedding::EmbeddingError;
use relvec::eval::{
    prediction_subset, run_evaluation, run_random_baseline, setting_estimate, single_prediction,
    EvalError, EvalOptions, PathwayScope, Setting, SettingSpec,
};
use relvec::kb::{kb_statistics, KbError, StatsOptions};
use relvec::{
    load_embeddings, load_knowledge_base, EmbeddingFormat, EmbeddingStore, KnowledgeBase, Method,
};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RvStatus {
    RvOk = 0,
    /// Null pointer, malformed UTF-8, unknown setting or entity name, or an
    /// invalid flag combination.
    RvInvalidArgument = 1,
    /// The file could not be opened or read.
    RvIo = 2,
    /// The file was read but its contents are malformed.
    RvParse = 3,
    /// The computation ran but produced no result (for example, no queries
    /// survive vocabulary intersection).
    RvFailed = 4,
    /// A panic escaped the library; a bug, please report it.
    RvInternal = 5,
}

pub struct RvStore {
    store: EmbeddingStore,
}

pub struct RvKnowledgeBase {
    kb: KnowledgeBase,
}

struct Failure {
    status: RvStatus,
    message: String,
}

type FfiResult<T> = Result<T, Failure>;

fn invalid(message: impl Into<String>) -> Failure {
    Failure {
        status: RvStatus::RvInvalidArgument,
        message: message.into(),
    }
}

impl From<EmbeddingError> for Failure {
    fn from(e: EmbeddingError) -> Self {
        let status = match e {
            EmbeddingError::Io { .. } => RvStatus::RvIo,
            _ => RvStatus::RvParse,
        };
        Failure {
            status,
            message: e.to_string(),
        }
    }
}

impl From<KbError> for Failure {
    fn from(e: KbError) -> Self {
        let status = match e {
            KbError::Io { .. } => RvStatus::RvIo,
            KbError::UnknownPathway(_) => RvStatus::RvInvalidArgument,
            _ => RvStatus::RvParse,
        };
        Failure {
            status,
            message: e.to_string(),
        }
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        let status = match &e {
            EvalError::SpecMismatch(_) => RvStatus::RvInvalidArgument,
            EvalError::Embedding(EmbeddingError::Io { .. }) => RvStatus::RvIo,
            EvalError::Kb(KbError::Io { .. }) => RvStatus::RvIo,
            EvalError::Kb(KbError::UnknownPathway(_)) => RvStatus::RvInvalidArgument,
            EvalError::Kb(_) => RvStatus::RvParse,
            _ => RvStatus::RvFailed,
        };
        Failure {
            status,
            message: e.to_string(),
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_last_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

/// Description of the most recent failure on this thread. The pointer stays
/// valid until the next library call on the same thread; never free it.
#[no_mangle]
pub extern "C" fn rv_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static string; never free it.
#[no_mangle]
pub extern "C" fn rv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

fn run_guarded<F>(body: F) -> RvStatus
where
    F: FnOnce() -> FfiResult<()>,
{
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_last_error("");
            RvStatus::RvOk
        }
        Ok(Err(failure)) => {
            set_last_error(&failure.message);
            failure.status
        }
        Err(_) => {
            set_last_error("internal panic");
            RvStatus::RvInternal
        }
    }
}

unsafe fn required_str<'a>(ptr: *const c_char, what: &str) -> FfiResult<&'a str> {
    if ptr.is_null() {
        return Err(invalid(format!("{what} must not be null")));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

unsafe fn optional_str<'a>(ptr: *const c_char, what: &str) -> FfiResult<Option<&'a str>> {
    if ptr.is_null() {
        Ok(None)
    } else {
        required_str(ptr, what).map(Some)
    }
}

unsafe fn write_out<T>(out: *mut *mut T, value: *mut T, what: &str) -> FfiResult<()> {
    if out.is_null() {
        return Err(invalid(format!("{what} out-parameter must not be null")));
    }
    *out = value;
    Ok(())
}

fn string_out(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " "))
        .map(CString::into_raw)
        .unwrap_or(std::ptr::null_mut())
}

unsafe fn deref<'a, T>(ptr: *const T, what: &str) -> FfiResult<&'a T> {
    ptr.as_ref()
        .ok_or_else(|| invalid(format!("{what} must not be null")))
}

fn parse_setting_spec(
    setting: &str,
    has_year: c_int,
    year: i32,
    pathway: Option<&str>,
) -> FfiResult<SettingSpec> {
    let parsed = Setting::parse_cli(setting)
        .ok_or_else(|| invalid(format!("unknown setting {setting:?}")))?;
    let mut spec = SettingSpec::new(parsed);
    if has_year != 0 {
        spec.year = Some(year);
    }
    if let Some(p) = pathway {
        spec.pathways = PathwayScope::Explicit(vec![relvec::PathwayId(p.to_string())]);
    }
    spec.validate().map_err(Failure::from)?;
    Ok(spec)
}

/// Loads an embedding store from a word2vec file. `binary_format` selects the
/// binary layout (nonzero) or the text layout (zero).
///
/// # Safety
/// `path` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rv_store_open(
    path: *const c_char,
    binary_format: c_int,
    out: *mut *mut RvStore,
) -> RvStatus {
    run_guarded(|| {
        let path = required_str(path, "path")?;
        let format = if binary_format != 0 {
            EmbeddingFormat::Word2VecBinary
        } else {
            EmbeddingFormat::Word2VecText
        };
        let store = load_embeddings(Path::new(path), format)?;
        write_out(out, Box::into_raw(Box::new(RvStore { store })), "store")
    })
}

/// Releases a store handle. Null is a no-op.
///
/// # Safety
/// `store` must be a handle from `rv_store_open` that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn rv_store_free(store: *mut RvStore) {
    if !store.is_null() {
        drop(Box::from_raw(store));
    }
}

/// Embedding dimensionality, or 0 for a null handle.
///
/// # Safety
/// `store` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn rv_store_dim(store: *const RvStore) -> usize {
    store.as_ref().map_or(0, |s| s.store.dim())
}

/// Vocabulary size, or 0 for a null handle.
///
/// # Safety
/// `store` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn rv_store_len(store: *const RvStore) -> usize {
    store.as_ref().map_or(0, |s| s.store.len())
}

/// 1 when the token is present, 0 otherwise (including on null arguments).
///
/// # Safety
/// `store` must be a live handle or null; `token` a valid string or null.
#[no_mangle]
pub unsafe extern "C" fn rv_store_contains(store: *const RvStore, token: *const c_char) -> c_int {
    let (Some(store), false) = (store.as_ref(), token.is_null()) else {
        return 0;
    };
    match CStr::from_ptr(token).to_str() {
        Ok(token) if store.store.contains(token) => 1,
        _ => 0,
    }
}

/// Loads and validates a knowledge base. Only `relations` is required; pass
/// null for files you do not have.
///
/// # Safety
/// `relations` must be a valid string; the optional paths valid strings or
/// null; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rv_kb_open(
    relations: *const c_char,
    pathways: *const c_char,
    years: *const c_char,
    names: *const c_char,
    out: *mut *mut RvKnowledgeBase,
) -> RvStatus {
    run_guarded(|| {
        let relations = required_str(relations, "relations path")?;
        let pathways = optional_str(pathways, "pathways path")?;
        let years = optional_str(years, "years path")?;
        let names = optional_str(names, "names path")?;
        let kb = load_knowledge_base(
            Path::new(relations),
            pathways.map(Path::new),
            years.map(Path::new),
            names.map(Path::new),
        )?;
        write_out(out, Box::into_raw(Box::new(RvKnowledgeBase { kb })), "kb")
    })
}

/// Releases a knowledge-base handle. Null is a no-op.
///
/// # Safety
/// `kb` must be a handle from `rv_kb_open` that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn rv_kb_free(kb: *mut RvKnowledgeBase) {
    if !kb.is_null() {
        drop(Box::from_raw(kb));
    }
}

/// Releases a string returned through a `char **` out-parameter.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn rv_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Evaluates a setting and writes the JSON report to `out_json`.
///
/// `setting` uses the command-line spelling (G, P1, ..., Gp, ...). Pass
/// `has_year = 0` for settings without a year. `use_naive` selects the naive
/// estimator; `no_centering` disables centering; `workers = 0` uses all
/// cores.
///
/// # Safety
/// Handles must be live; `setting` a valid string; `out_json` a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn rv_evaluate_json(
    store: *const RvStore,
    kb: *const RvKnowledgeBase,
    setting: *const c_char,
    has_year: c_int,
    year: i32,
    use_naive: c_int,
    no_centering: c_int,
    workers: usize,
    out_json: *mut *mut c_char,
) -> RvStatus {
    run_guarded(|| {
        let store = deref(store, "store")?;
        let kb = deref(kb, "kb")?;
        let setting = required_str(setting, "setting")?;
        let spec = parse_setting_spec(setting, has_year, year, None)?;
        let options = EvalOptions {
            estimator: if use_naive != 0 { Method::Naive } else { Method::Paired },
            centering: no_centering == 0,
            workers,
        };
        let report = run_evaluation(&kb.kb, &store.store, &spec, &options).map_err(Failure::from)?;
        write_out(out_json, string_out(report.to_json()), "json")
    })
}

/// Runs the random-permutation baseline and writes the JSON report.
///
/// # Safety
/// As `rv_evaluate_json`.
#[no_mangle]
pub unsafe extern "C" fn rv_baseline_json(
    store: *const RvStore,
    kb: *const RvKnowledgeBase,
    setting: *const c_char,
    has_year: c_int,
    year: i32,
    repeats: usize,
    seed: u64,
    workers: usize,
    out_json: *mut *mut c_char,
) -> RvStatus {
    run_guarded(|| {
        let store = deref(store, "store")?;
        let kb = deref(kb, "kb")?;
        let setting = required_str(setting, "setting")?;
        let spec = parse_setting_spec(setting, has_year, year, None)?;
        let report = run_random_baseline(&kb.kb, &store.store, &spec, repeats, seed, workers)
            .map_err(Failure::from)?;
        write_out(out_json, string_out(report.to_json()), "json")
    })
}

/// Knowledge-base statistics (after vocabulary intersection) as JSON.
///
/// # Safety
/// Handles must be live; `out_json` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rv_stats_json(
    store: *const RvStore,
    kb: *const RvKnowledgeBase,
    has_year: c_int,
    year: i32,
    per_pathway: c_int,
    out_json: *mut *mut c_char,
) -> RvStatus {
    run_guarded(|| {
        let store = deref(store, "store")?;
        let kb = deref(kb, "kb")?;
        let options = StatsOptions {
            per_pathway: per_pathway != 0,
            per_year: (has_year != 0).then_some(year),
            ..Default::default()
        };
        let report = kb_statistics(&kb.kb, &store.store, &options).map_err(Failure::from)?;
        let json = serde_json::to_string_pretty(&report).map_err(|e| Failure {
            status: RvStatus::RvInternal,
            message: e.to_string(),
        })? + "\n";
        write_out(out_json, string_out(json), "json")
    })
}

/// Ranks the top-k candidates for one query entity and writes TSV rows
/// `query<TAB>rank<TAB>entity<TAB>score` to `out_tsv`.
///
/// `query` is a prefixed id (D:... / G:...) or a unique display name.
/// `pathway` may be null except for pathway settings.
///
/// # Safety
/// Handles must be live; strings valid or (where documented) null; `out_tsv`
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rv_predict_tsv(
    store: *const RvStore,
    kb: *const RvKnowledgeBase,
    query: *const c_char,
    k: usize,
    setting: *const c_char,
    has_year: c_int,
    year: i32,
    pathway: *const c_char,
    use_naive: c_int,
    no_centering: c_int,
    out_tsv: *mut *mut c_char,
) -> RvStatus {
    run_guarded(|| {
        let store = deref(store, "store")?;
        let kb = deref(kb, "kb")?;
        let query = required_str(query, "query")?;
        let setting = required_str(setting, "setting")?;
        let pathway = optional_str(pathway, "pathway")?;
        if k == 0 {
            return Err(invalid("k must be at least 1"));
        }
        let spec = parse_setting_spec(setting, has_year, year, pathway)?;
        let query_id = kb
            .kb
            .resolve_entity(query)
            .ok_or_else(|| invalid(format!("unknown query {query:?}")))?;
        let method = if use_naive != 0 { Method::Naive } else { Method::Paired };
        let prediction = single_prediction(
            &kb.kb,
            &store.store,
            &spec,
            &query_id,
            k,
            method,
            no_centering == 0,
        )
        .map_err(Failure::from)?;
        let mut tsv = String::new();
        for (rank, (id, score)) in prediction.ordered.iter().enumerate() {
            tsv.push_str(&format!(
                "{}\t{}\t{}\t{:.6}\n",
                kb.kb.display(&query_id),
                rank + 1,
                kb.kb.display(id),
                score
            ));
        }
        write_out(out_tsv, string_out(tsv), "tsv")
    })
}

/// Exports the relation estimate a setting prescribes as JSON
/// (`{method, direction, provenance, support, vector}`), for reuse by other
/// tooling.
///
/// # Safety
/// As `rv_predict_tsv`, without the query argument.
#[no_mangle]
pub unsafe extern "C" fn rv_estimate_json(
    store: *const RvStore,
    kb: *const RvKnowledgeBase,
    setting: *const c_char,
    has_year: c_int,
    year: i32,
    pathway: *const c_char,
    use_naive: c_int,
    out_json: *mut *mut c_char,
) -> RvStatus {
    run_guarded(|| {
        let store = deref(store, "store")?;
        let kb = deref(kb, "kb")?;
        let setting = required_str(setting, "setting")?;
        let pathway = optional_str(pathway, "pathway")?;
        let spec = parse_setting_spec(setting, has_year, year, pathway)?;
        let subset = prediction_subset(&kb.kb, &spec).map_err(Failure::from)?;
        let method = if use_naive != 0 { Method::Naive } else { Method::Paired };
        let estimate =
            setting_estimate(&store.store, &kb.kb, &spec, &subset, method).map_err(Failure::from)?;
        let json = estimate.to_json().map_err(|e| Failure {
            status: RvStatus::RvInternal,
            message: e.to_string(),
        })? + "\n";
        write_out(out_json, string_out(json), "json")
    })
}
