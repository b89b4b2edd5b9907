//! Drives the exported C ABI end to end: handle lifecycle, status codes,
//! error reporting, and the JSON/TSV payloads.

use std::ffi::{CStr, CString};
use std::fs::File;
use std::io::Write;
use std::os::raw::c_char;
use std::path::{Path, PathBuf};
use std::ptr;

use relvec_ffi::*;

struct Fixture {
    embeddings: PathBuf,
    relations: PathBuf,
    pathways: PathBuf,
    names: PathBuf,
}

/// Planted-offset fixture: each gene embedding is its drug's embedding plus a
/// shared offset, so top-1 prediction is exact.
fn planted(dir: &Path, n_pairs: usize, dim: usize) -> Fixture {
    let offset: Vec<f64> = (0..dim).map(|k| 0.1 * (k as f64 + 1.0)).collect();
    let relations = dir.join("relations.tsv");
    let mut rel = File::create(&relations).unwrap();
    writeln!(rel, "drug\tgene").unwrap();
    let names = dir.join("names.tsv");
    let mut nam = File::create(&names).unwrap();
    writeln!(nam, "entity\tname").unwrap();
    let embeddings = dir.join("embeddings.txt");
    let mut emb = File::create(&embeddings).unwrap();
    writeln!(emb, "{} {}", 2 * n_pairs, dim).unwrap();
    let mut state = 0x12345u64;
    let mut next = move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 33) as f64 / (1u64 << 31) as f64) - 1.0
    };
    for i in 0..n_pairs {
        let drug: Vec<f64> = (0..dim).map(|_| next()).collect();
        let gene: Vec<f64> = drug.iter().zip(offset.iter()).map(|(x, v)| x + v).collect();
        writeln!(rel, "D:d{i:03}\tG:g{i:03}").unwrap();
        writeln!(nam, "D:d{i:03}\tdrug {i}").unwrap();
        writeln!(nam, "G:g{i:03}\tgene {i}").unwrap();
        let fmt = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{}", *x as f32))
                .collect::<Vec<_>>()
                .join(" ")
        };
        writeln!(emb, "D:d{i:03} {}", fmt(&drug)).unwrap();
        writeln!(emb, "G:g{i:03} {}", fmt(&gene)).unwrap();
    }
    let pathways = dir.join("pathways.tsv");
    let mut f = File::create(&pathways).unwrap();
    writeln!(f, "pathway\tkind\tentity").unwrap();
    for i in 0..n_pairs.min(8) {
        writeln!(f, "p1\tdrug\tD:d{i:03}").unwrap();
        writeln!(f, "p1\tgene\tG:g{i:03}").unwrap();
    }
    Fixture {
        embeddings,
        relations,
        pathways,
        names,
    }
}

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    unsafe {
        CStr::from_ptr(rv_last_error_message())
            .to_string_lossy()
            .into_owned()
    }
}

fn take_string(ptr: *mut c_char) -> String {
    assert!(!ptr.is_null());
    let s = unsafe { CStr::from_ptr(ptr).to_string_lossy().into_owned() };
    unsafe { rv_string_free(ptr) };
    s
}

fn open_fixture(fixture: &Fixture) -> (*mut RvStore, *mut RvKnowledgeBase) {
    let mut store: *mut RvStore = ptr::null_mut();
    let path = cstr(fixture.embeddings.to_str().unwrap());
    let status = unsafe { rv_store_open(path.as_ptr(), 0, &mut store) };
    assert_eq!(status, RvStatus::RvOk, "{}", last_error());

    let mut kb: *mut RvKnowledgeBase = ptr::null_mut();
    let relations = cstr(fixture.relations.to_str().unwrap());
    let pathways = cstr(fixture.pathways.to_str().unwrap());
    let names = cstr(fixture.names.to_str().unwrap());
    let status = unsafe {
        rv_kb_open(
            relations.as_ptr(),
            pathways.as_ptr(),
            ptr::null(),
            names.as_ptr(),
            &mut kb,
        )
    };
    assert_eq!(status, RvStatus::RvOk, "{}", last_error());
    (store, kb)
}

#[test]
fn store_lifecycle_and_queries() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = planted(dir.path(), 10, 6);
    let (store, kb) = open_fixture(&fixture);

    unsafe {
        assert_eq!(rv_store_dim(store), 6);
        assert_eq!(rv_store_len(store), 20);
        let present = cstr("D:d003");
        let absent = cstr("D:nope");
        assert_eq!(rv_store_contains(store, present.as_ptr()), 1);
        assert_eq!(rv_store_contains(store, absent.as_ptr()), 0);
        assert_eq!(rv_store_contains(ptr::null(), present.as_ptr()), 0);
        rv_store_free(store);
        rv_kb_free(kb);
    }
}

#[test]
fn open_errors_set_status_and_message() {
    let mut store: *mut RvStore = ptr::null_mut();
    let missing = cstr("/definitely/not/here.txt");
    let status = unsafe { rv_store_open(missing.as_ptr(), 0, &mut store) };
    assert_eq!(status, RvStatus::RvIo);
    assert!(!last_error().is_empty());

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "not a header\n").unwrap();
    let bad_path = cstr(bad.to_str().unwrap());
    let status = unsafe { rv_store_open(bad_path.as_ptr(), 0, &mut store) };
    assert_eq!(status, RvStatus::RvParse);

    let status = unsafe { rv_store_open(ptr::null(), 0, &mut store) };
    assert_eq!(status, RvStatus::RvInvalidArgument);
}

#[test]
fn evaluate_reports_perfect_planted_recovery() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = planted(dir.path(), 30, 10);
    let (store, kb) = open_fixture(&fixture);
    let setting = cstr("G");
    let mut json: *mut c_char = ptr::null_mut();
    let status = unsafe {
        rv_evaluate_json(store, kb, setting.as_ptr(), 0, 0, 0, 0, 1, &mut json)
    };
    assert_eq!(status, RvStatus::RvOk, "{}", last_error());
    let parsed: serde_json::Value = serde_json::from_str(&take_string(json)).unwrap();
    assert_eq!(parsed["rows"][0]["top1"], 1.0);
    assert_eq!(parsed["rows"][0]["n_queries"], 30);
    unsafe {
        rv_store_free(store);
        rv_kb_free(kb);
    }
}

#[test]
fn evaluate_rejects_bad_setting_and_missing_year() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = planted(dir.path(), 5, 4);
    let (store, kb) = open_fixture(&fixture);
    let mut json: *mut c_char = ptr::null_mut();

    let unknown = cstr("Q9");
    let status =
        unsafe { rv_evaluate_json(store, kb, unknown.as_ptr(), 0, 0, 0, 0, 1, &mut json) };
    assert_eq!(status, RvStatus::RvInvalidArgument);
    assert!(last_error().contains("unknown setting"), "{}", last_error());

    let y1 = cstr("Y1");
    let status = unsafe { rv_evaluate_json(store, kb, y1.as_ptr(), 0, 0, 0, 0, 1, &mut json) };
    assert_eq!(status, RvStatus::RvInvalidArgument);
    assert!(last_error().contains("year"), "{}", last_error());

    unsafe {
        rv_store_free(store);
        rv_kb_free(kb);
    }
}

#[test]
fn baseline_is_deterministic_through_the_abi() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = planted(dir.path(), 12, 5);
    let (store, kb) = open_fixture(&fixture);
    let setting = cstr("G");
    let run = || {
        let mut json: *mut c_char = ptr::null_mut();
        let status = unsafe {
            rv_baseline_json(store, kb, setting.as_ptr(), 0, 0, 5, 42, 2, &mut json)
        };
        assert_eq!(status, RvStatus::RvOk, "{}", last_error());
        take_string(json)
    };
    assert_eq!(run(), run());
    unsafe {
        rv_store_free(store);
        rv_kb_free(kb);
    }
}

#[test]
fn predict_returns_tsv_rows_with_names() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = planted(dir.path(), 15, 8);
    let (store, kb) = open_fixture(&fixture);
    let query = cstr("drug 4");
    let setting = cstr("G");
    let mut tsv: *mut c_char = ptr::null_mut();
    let status = unsafe {
        rv_predict_tsv(
            store,
            kb,
            query.as_ptr(),
            3,
            setting.as_ptr(),
            0,
            0,
            ptr::null(),
            0,
            0,
            &mut tsv,
        )
    };
    assert_eq!(status, RvStatus::RvOk, "{}", last_error());
    let text = take_string(tsv);
    assert!(text.starts_with("drug 4\t1\tgene 4\t"), "{text}");
    assert_eq!(text.lines().count(), 3);

    let bad = cstr("no such thing");
    let status = unsafe {
        rv_predict_tsv(
            store,
            kb,
            bad.as_ptr(),
            3,
            setting.as_ptr(),
            0,
            0,
            ptr::null(),
            0,
            0,
            &mut tsv,
        )
    };
    assert_eq!(status, RvStatus::RvInvalidArgument);
    assert!(last_error().contains("unknown query"));

    unsafe {
        rv_store_free(store);
        rv_kb_free(kb);
    }
}

#[test]
fn stats_and_estimate_payloads_parse() {
    let dir = tempfile::tempdir().unwrap();
    let fixture = planted(dir.path(), 20, 6);
    let (store, kb) = open_fixture(&fixture);

    let mut json: *mut c_char = ptr::null_mut();
    let status = unsafe { rv_stats_json(store, kb, 0, 0, 1, &mut json) };
    assert_eq!(status, RvStatus::RvOk, "{}", last_error());
    let stats: serde_json::Value = serde_json::from_str(&take_string(json)).unwrap();
    assert_eq!(stats["global"]["relations_in_vocab"], 20);

    let setting = cstr("P1");
    let pathway = cstr("p1");
    let status = unsafe {
        rv_estimate_json(
            store,
            kb,
            setting.as_ptr(),
            0,
            0,
            pathway.as_ptr(),
            0,
            &mut json,
        )
    };
    assert_eq!(status, RvStatus::RvOk, "{}", last_error());
    let estimate: serde_json::Value = serde_json::from_str(&take_string(json)).unwrap();
    assert_eq!(estimate["method"], "paired");
    assert_eq!(estimate["provenance"]["scope"]["kind"], "pathway");
    assert_eq!(estimate["vector"].as_array().unwrap().len(), 6);

    unsafe {
        rv_store_free(store);
        rv_kb_free(kb);
    }
}

#[test]
fn version_and_header_exist() {
    let version = unsafe { CStr::from_ptr(rv_version()) }.to_str().unwrap();
    assert!(!version.is_empty());
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/relvec.h");
    let text = std::fs::read_to_string(header).unwrap();
    for symbol in [
        "rv_store_open",
        "rv_kb_open",
        "rv_evaluate_json",
        "rv_baseline_json",
        "rv_predict_tsv",
        "rv_stats_json",
        "rv_estimate_json",
        "rv_string_free",
        "rv_last_error_message",
        "RV_INVALID_ARGUMENT",
    ] {
        assert!(text.contains(symbol), "header is missing {symbol}");
    }
}
