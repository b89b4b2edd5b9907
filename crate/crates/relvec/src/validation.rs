//! Lenient file checks that collect findings instead of failing fast, for
//! pre-flight validation of knowledge-base and embedding files.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embedding::{load_embeddings, EmbeddingError, EmbeddingFormat};
use crate::kb::{EntityId, EntityKind};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub code: String,
    pub message: String,
}

impl Finding {
    fn new(code: &str, message: String) -> Self {
        Finding {
            code: code.to_string(),
            message,
        }
    }
}

fn read_rows(path: &Path, header: &str, columns: usize, findings: &mut Vec<Finding>) -> std::io::Result<Vec<(usize, Vec<String>)>> {
    let file = File::open(path)?;
    let mut rows = Vec::new();
    let mut saw_header = false;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<String> = line.split('\t').map(|s| s.to_string()).collect();
        if !saw_header {
            saw_header = true;
            if fields.join("\t") != header {
                findings.push(Finding::new(
                    "bad-header",
                    format!("{}: expected header {header:?}", path.display()),
                ));
            }
            continue;
        }
        if fields.len() != columns {
            findings.push(Finding::new(
                "bad-row",
                format!(
                    "{}:{}: expected {columns} columns, found {}",
                    path.display(),
                    i + 1,
                    fields.len()
                ),
            ));
            continue;
        }
        rows.push((i + 1, fields));
    }
    if !saw_header {
        findings.push(Finding::new(
            "bad-header",
            format!("{}: file is empty", path.display()),
        ));
    }
    Ok(rows)
}

fn check_id(
    path: &Path,
    line: usize,
    raw: &str,
    expected: Option<EntityKind>,
    findings: &mut Vec<Finding>,
) -> Option<EntityId> {
    match EntityId::parse(raw) {
        Err(_) => {
            findings.push(Finding::new(
                "bad-id",
                format!("{}:{line}: id {raw:?} lacks a 'D:' or 'G:' prefix", path.display()),
            ));
            None
        }
        Ok(id) => {
            if let Some(kind) = expected {
                if id.kind() != kind {
                    findings.push(Finding::new(
                        "namespace-mismatch",
                        format!(
                            "{}:{line}: id {raw:?} used as a {} but prefixed for the other namespace",
                            path.display(),
                            match kind {
                                EntityKind::Drug => "drug",
                                EntityKind::Gene => "gene",
                            }
                        ),
                    ));
                    return None;
                }
            }
            Some(id)
        }
    }
}

/// Checks knowledge-base files and returns every violation found. IO failures
/// are the only hard errors.
pub fn validate_kb_files(
    relations: Option<&Path>,
    pathways: Option<&Path>,
    years: Option<&Path>,
    names: Option<&Path>,
) -> std::io::Result<Vec<Finding>> {
    let mut findings = Vec::new();
    let mut entity_years: BTreeMap<EntityId, i32> = BTreeMap::new();
    let mut pair_years: BTreeMap<(EntityId, EntityId), i32> = BTreeMap::new();

    if let Some(path) = relations {
        let mut seen: BTreeSet<(EntityId, EntityId)> = BTreeSet::new();
        for (line, row) in read_rows(path, "drug\tgene", 2, &mut findings)? {
            let drug = check_id(path, line, &row[0], Some(EntityKind::Drug), &mut findings);
            let gene = check_id(path, line, &row[1], Some(EntityKind::Gene), &mut findings);
            if let (Some(d), Some(g)) = (drug, gene) {
                if !seen.insert((d.clone(), g.clone())) {
                    findings.push(Finding::new(
                        "duplicate-pair",
                        format!("{}:{line}: duplicate pair ({}, {})", path.display(), d, g),
                    ));
                }
            }
        }
    }

    if let Some(path) = pathways {
        for (line, row) in read_rows(path, "pathway\tkind\tentity", 3, &mut findings)? {
            match row[1].as_str() {
                "drug" => {
                    check_id(path, line, &row[2], Some(EntityKind::Drug), &mut findings);
                }
                "gene" => {
                    check_id(path, line, &row[2], Some(EntityKind::Gene), &mut findings);
                }
                other => findings.push(Finding::new(
                    "bad-row",
                    format!("{}:{line}: kind must be drug or gene, found {other:?}", path.display()),
                )),
            }
        }
    }

    if let Some(path) = years {
        for (line, row) in read_rows(path, "kind\tkey\tyear", 3, &mut findings)? {
            let year: Option<i32> = row[2].parse().ok();
            if year.is_none() {
                findings.push(Finding::new(
                    "bad-row",
                    format!("{}:{line}: unparseable year {:?}", path.display(), row[2]),
                ));
                continue;
            }
            let year = year.unwrap();
            match row[0].as_str() {
                "drug" | "gene" => {
                    let kind = if row[0] == "drug" {
                        EntityKind::Drug
                    } else {
                        EntityKind::Gene
                    };
                    if let Some(id) = check_id(path, line, &row[1], Some(kind), &mut findings) {
                        if let Some(&prev) = entity_years.get(&id) {
                            if prev != year {
                                findings.push(Finding::new(
                                    "conflicting-year",
                                    format!(
                                        "{}:{line}: {} already has year {prev}, now {year}",
                                        path.display(),
                                        id
                                    ),
                                ));
                            }
                        }
                        entity_years.insert(id, year);
                    }
                }
                "pair" => match row[1].split_once('|') {
                    None => findings.push(Finding::new(
                        "bad-row",
                        format!("{}:{line}: pair key {:?} is not 'drug|gene'", path.display(), row[1]),
                    )),
                    Some((d, g)) => {
                        let drug = check_id(path, line, d, Some(EntityKind::Drug), &mut findings);
                        let gene = check_id(path, line, g, Some(EntityKind::Gene), &mut findings);
                        if let (Some(d), Some(g)) = (drug, gene) {
                            if let Some(&prev) = pair_years.get(&(d.clone(), g.clone())) {
                                if prev != year {
                                    findings.push(Finding::new(
                                        "conflicting-year",
                                        format!(
                                            "{}:{line}: pair already has year {prev}, now {year}",
                                            path.display()
                                        ),
                                    ));
                                }
                            }
                            pair_years.insert((d, g), year);
                        }
                    }
                },
                other => findings.push(Finding::new(
                    "bad-row",
                    format!(
                        "{}:{line}: kind must be drug, gene or pair, found {other:?}",
                        path.display()
                    ),
                )),
            }
        }
    }

    if let Some(path) = names {
        for (line, row) in read_rows(path, "entity\tname", 2, &mut findings)? {
            check_id(path, line, &row[0], None, &mut findings);
        }
    }

    // Pair years may not precede the first appearance of either entity.
    for ((drug, gene), pair_year) in &pair_years {
        for entity in [drug, gene] {
            if let Some(&entity_year) = entity_years.get(entity) {
                if entity_year > *pair_year {
                    findings.push(Finding::new(
                        "year-order",
                        format!(
                            "pair ({drug}, {gene}) co-appears in {pair_year}, before {entity} ({entity_year})"
                        ),
                    ));
                }
            }
        }
    }

    Ok(findings)
}

/// Checks an embedding file. Structural errors surface as findings; only IO
/// failures are hard errors.
pub fn validate_embedding_file(path: &Path, format: EmbeddingFormat) -> std::io::Result<Vec<Finding>> {
    match load_embeddings(path, format) {
        Ok(_) => Ok(Vec::new()),
        Err(EmbeddingError::Io { source, .. }) => Err(source),
        Err(e) => {
            let code = match &e {
                EmbeddingError::MalformedHeader { .. } => "bad-header",
                EmbeddingError::DimensionMismatch { .. } => "dimension-mismatch",
                EmbeddingError::DuplicateToken { .. } => "duplicate-token",
                EmbeddingError::NonFinite { .. } => "non-finite",
                _ => "bad-row",
            };
            Ok(vec![Finding::new(code, e.to_string())])
        }
    }
}
