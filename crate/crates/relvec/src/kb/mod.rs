//! Entity sets, drug-gene relations, pathway memberships, and
//! first-appearance years, with the restrictions and projections the
//! evaluation settings are built from.
//!
//! Entity ids carry a `D:` or `G:` prefix in every file so that the drug and
//! gene namespaces stay disjoint even when the underlying database ids would
//! collide textually. The prefixed id is also the embedding-store token.

mod stats;
mod subset;

pub use stats::{kb_statistics, GlobalStats, PathwayStats, PathwayYearStats, StatsOptions, StatisticsReport, YearStats};
pub use subset::{
    filter_pathways, pathway_entities_up_to, restrict_pathway, restrict_pathway_year, restrict_year,
    split_interval, IntervalTag, RelationSubset, Scope,
};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum KbError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {detail}")]
    Parse {
        path: String,
        line: usize,
        detail: String,
    },
    #[error("duplicate pair ({drug}, {gene})")]
    DuplicatePair { drug: String, gene: String },
    #[error("pair ({drug}, {gene}) first co-appears in {pair_year}, before an entity year ({entity} appeared {entity_year})")]
    YearOrder {
        drug: String,
        gene: String,
        pair_year: i32,
        entity: String,
        entity_year: i32,
    },
    #[error("invalid entity id {id:?}: expected a 'D:' or 'G:' prefix")]
    BadPrefix { id: String },
    #[error("id {id:?} used as a {expected} but carries the other namespace prefix")]
    NamespaceMismatch { id: String, expected: &'static str },
    #[error("unknown pathway {0:?}")]
    UnknownPathway(String),
    #[error("no first-appearance years are loaded")]
    YearsNotLoaded,
    #[error("pair ({drug}, {gene}) has no first-co-appearance year")]
    MissingPairYear { drug: String, gene: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EntityKind {
    Drug,
    Gene,
}

/// Prefixed entity id (`D:...` or `G:...`). The full prefixed form doubles as
/// the embedding-store token.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(String);

impl EntityId {
    pub fn parse(s: &str) -> Result<Self, KbError> {
        if (s.starts_with("D:") || s.starts_with("G:")) && s.len() > 2 {
            Ok(EntityId(s.to_string()))
        } else {
            Err(KbError::BadPrefix { id: s.to_string() })
        }
    }

    pub fn drug(raw: &str) -> Self {
        EntityId(format!("D:{raw}"))
    }

    pub fn gene(raw: &str) -> Self {
        EntityId(format!("G:{raw}"))
    }

    pub fn kind(&self) -> EntityKind {
        if self.0.starts_with("D:") {
            EntityKind::Drug
        } else {
            EntityKind::Gene
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PathwayId(pub String);

impl fmt::Display for PathwayId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One drug-gene relation. Ordered by (drug, gene) so that sorted sets give a
/// stable iteration order everywhere.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RelationPair {
    pub drug: EntityId,
    pub gene: EntityId,
}

#[derive(Debug, Clone, Default)]
pub struct PathwayMembers {
    pub drugs: BTreeSet<EntityId>,
    pub genes: BTreeSet<EntityId>,
}

#[derive(Debug, Clone, Default)]
pub struct KnowledgeBase {
    drugs: BTreeSet<EntityId>,
    genes: BTreeSet<EntityId>,
    relations: BTreeSet<RelationPair>,
    pathways: BTreeMap<PathwayId, PathwayMembers>,
    entity_years: BTreeMap<EntityId, i32>,
    pair_years: BTreeMap<RelationPair, i32>,
    names: BTreeMap<EntityId, String>,
}

impl KnowledgeBase {
    pub fn drugs(&self) -> &BTreeSet<EntityId> {
        &self.drugs
    }

    pub fn genes(&self) -> &BTreeSet<EntityId> {
        &self.genes
    }

    pub fn relations(&self) -> &BTreeSet<RelationPair> {
        &self.relations
    }

    /// The unrestricted relation set as a subset value.
    pub fn relation_subset(&self) -> RelationSubset {
        RelationSubset::new(self.relations.clone(), Scope::Global, IntervalTag::Full)
    }

    pub fn pathway_ids(&self) -> impl Iterator<Item = &PathwayId> {
        self.pathways.keys()
    }

    pub fn pathway_members(&self, p: &PathwayId) -> Option<&PathwayMembers> {
        self.pathways.get(p)
    }

    pub fn entity_year(&self, id: &EntityId) -> Option<i32> {
        self.entity_years.get(id).copied()
    }

    pub fn pair_year(&self, pair: &RelationPair) -> Option<i32> {
        self.pair_years.get(pair).copied()
    }

    pub fn has_years(&self) -> bool {
        !self.entity_years.is_empty()
    }

    pub fn name_of(&self, id: &EntityId) -> Option<&str> {
        self.names.get(id).map(|s| s.as_str())
    }

    /// Display name when known, otherwise the id itself.
    pub fn display<'a>(&'a self, id: &'a EntityId) -> &'a str {
        self.name_of(id).unwrap_or_else(|| id.as_str())
    }

    pub fn names(&self) -> &BTreeMap<EntityId, String> {
        &self.names
    }

    /// Resolves a raw string to an entity: a known prefixed id first, then a
    /// unique display-name match. `None` when nothing (or more than one name)
    /// matches.
    pub fn resolve_entity(&self, raw: &str) -> Option<EntityId> {
        if let Ok(id) = EntityId::parse(raw) {
            if self.drugs.contains(&id) || self.genes.contains(&id) {
                return Some(id);
            }
        }
        let mut matches = self
            .names
            .iter()
            .filter(|(_, name)| name.as_str() == raw)
            .map(|(id, _)| id.clone());
        match (matches.next(), matches.next()) {
            (Some(id), None) => Some(id),
            _ => None,
        }
    }

    /// Entities of `kind` that first appeared up to `year`.
    pub fn entities_up_to_year(&self, kind: EntityKind, year: i32) -> BTreeSet<EntityId> {
        let universe = match kind {
            EntityKind::Drug => &self.drugs,
            EntityKind::Gene => &self.genes,
        };
        universe
            .iter()
            .filter(|e| matches!(self.entity_years.get(*e), Some(&y) if y <= year))
            .cloned()
            .collect()
    }
}

struct TsvReader {
    path: String,
    lines: std::io::Lines<BufReader<File>>,
    line_no: usize,
}

impl TsvReader {
    fn open(path: &Path, header: &str) -> Result<Self, KbError> {
        let file = File::open(path).map_err(|source| KbError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut reader = TsvReader {
            path: path.display().to_string(),
            lines: BufReader::new(file).lines(),
            line_no: 0,
        };
        match reader.next_row()? {
            Some(first) if first.join("\t") == header => Ok(reader),
            _ => Err(KbError::Parse {
                path: path.display().to_string(),
                line: 1,
                detail: format!("expected header {header:?}"),
            }),
        }
    }

    fn next_row(&mut self) -> Result<Option<Vec<String>>, KbError> {
        loop {
            match self.lines.next() {
                None => return Ok(None),
                Some(Err(source)) => {
                    return Err(KbError::Io {
                        path: self.path.clone(),
                        source,
                    })
                }
                Some(Ok(line)) => {
                    self.line_no += 1;
                    let line = line.trim_end_matches('\r');
                    if line.is_empty() {
                        continue;
                    }
                    return Ok(Some(line.split('\t').map(|s| s.to_string()).collect()));
                }
            }
        }
    }

    fn error(&self, detail: String) -> KbError {
        KbError::Parse {
            path: self.path.clone(),
            line: self.line_no,
            detail,
        }
    }
}

fn parse_typed_id(reader: &TsvReader, raw: &str, expected: EntityKind) -> Result<EntityId, KbError> {
    let id = EntityId::parse(raw).map_err(|e| reader.error(e.to_string()))?;
    if id.kind() != expected {
        return Err(KbError::NamespaceMismatch {
            id: raw.to_string(),
            expected: match expected {
                EntityKind::Drug => "drug",
                EntityKind::Gene => "gene",
            },
        });
    }
    Ok(id)
}

/// Loads and validates a knowledge base from TSV files.
///
/// Entities referenced anywhere (relations, pathway memberships, year rows,
/// name rows) become part of the drug/gene universes; intersection with an
/// embedding vocabulary happens at evaluation time, so one knowledge base can
/// serve several stores.
pub fn load_knowledge_base(
    relations: &Path,
    pathways: Option<&Path>,
    years: Option<&Path>,
    names: Option<&Path>,
) -> Result<KnowledgeBase, KbError> {
    let mut kb = KnowledgeBase::default();

    let mut reader = TsvReader::open(relations, "drug\tgene")?;
    while let Some(row) = reader.next_row()? {
        if row.len() != 2 {
            return Err(reader.error(format!("expected 2 columns, found {}", row.len())));
        }
        let drug = parse_typed_id(&reader, &row[0], EntityKind::Drug)?;
        let gene = parse_typed_id(&reader, &row[1], EntityKind::Gene)?;
        let pair = RelationPair {
            drug: drug.clone(),
            gene: gene.clone(),
        };
        if !kb.relations.insert(pair) {
            return Err(KbError::DuplicatePair {
                drug: drug.as_str().to_string(),
                gene: gene.as_str().to_string(),
            });
        }
        kb.drugs.insert(drug);
        kb.genes.insert(gene);
    }

    if let Some(path) = pathways {
        let mut reader = TsvReader::open(path, "pathway\tkind\tentity")?;
        while let Some(row) = reader.next_row()? {
            if row.len() != 3 {
                return Err(reader.error(format!("expected 3 columns, found {}", row.len())));
            }
            let pathway = PathwayId(row[0].clone());
            let members = kb.pathways.entry(pathway).or_default();
            match row[1].as_str() {
                "drug" => {
                    let id = parse_typed_id(&reader, &row[2], EntityKind::Drug)?;
                    members.drugs.insert(id.clone());
                    kb.drugs.insert(id);
                }
                "gene" => {
                    let id = parse_typed_id(&reader, &row[2], EntityKind::Gene)?;
                    members.genes.insert(id.clone());
                    kb.genes.insert(id);
                }
                other => return Err(reader.error(format!("kind must be drug or gene, found {other:?}"))),
            }
        }
    }

    if let Some(path) = years {
        let mut reader = TsvReader::open(path, "kind\tkey\tyear")?;
        while let Some(row) = reader.next_row()? {
            if row.len() != 3 {
                return Err(reader.error(format!("expected 3 columns, found {}", row.len())));
            }
            let year: i32 = row[2]
                .parse()
                .map_err(|_| reader.error(format!("unparseable year {:?}", row[2])))?;
            match row[0].as_str() {
                "drug" | "gene" => {
                    let expected = if row[0] == "drug" {
                        EntityKind::Drug
                    } else {
                        EntityKind::Gene
                    };
                    let id = parse_typed_id(&reader, &row[1], expected)?;
                    if let Some(&prev) = kb.entity_years.get(&id) {
                        if prev != year {
                            return Err(reader.error(format!(
                                "conflicting years for {}: {prev} and {year}",
                                id.as_str()
                            )));
                        }
                    }
                    match expected {
                        EntityKind::Drug => kb.drugs.insert(id.clone()),
                        EntityKind::Gene => kb.genes.insert(id.clone()),
                    };
                    kb.entity_years.insert(id, year);
                }
                "pair" => {
                    let (d, g) = row[1].split_once('|').ok_or_else(|| {
                        reader.error(format!("pair key {:?} is not 'drug|gene'", row[1]))
                    })?;
                    let drug = parse_typed_id(&reader, d, EntityKind::Drug)?;
                    let gene = parse_typed_id(&reader, g, EntityKind::Gene)?;
                    let pair = RelationPair { drug, gene };
                    if let Some(&prev) = kb.pair_years.get(&pair) {
                        if prev != year {
                            return Err(reader.error(format!(
                                "conflicting years for pair {:?}: {prev} and {year}",
                                row[1]
                            )));
                        }
                    }
                    kb.pair_years.insert(pair, year);
                }
                other => {
                    return Err(reader.error(format!("kind must be drug, gene or pair, found {other:?}")))
                }
            }
        }
    }

    if let Some(path) = names {
        let mut reader = TsvReader::open(path, "entity\tname")?;
        while let Some(row) = reader.next_row()? {
            if row.len() != 2 {
                return Err(reader.error(format!("expected 2 columns, found {}", row.len())));
            }
            let id = EntityId::parse(&row[0]).map_err(|e| reader.error(e.to_string()))?;
            match id.kind() {
                EntityKind::Drug => kb.drugs.insert(id.clone()),
                EntityKind::Gene => kb.genes.insert(id.clone()),
            };
            kb.names.insert(id, row[1].clone());
        }
    }

    // A pair cannot co-appear before either of its entities.
    for (pair, &pair_year) in &kb.pair_years {
        for entity in [&pair.drug, &pair.gene] {
            if let Some(&entity_year) = kb.entity_years.get(entity) {
                if entity_year > pair_year {
                    return Err(KbError::YearOrder {
                        drug: pair.drug.as_str().to_string(),
                        gene: pair.gene.as_str().to_string(),
                        pair_year,
                        entity: entity.as_str().to_string(),
                        entity_year,
                    });
                }
            }
        }
    }

    Ok(kb)
}


#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn toy_kb_loads_with_expected_sets() {
        let dir = tempfile::tempdir().unwrap();
        let kb = test_fixtures::toy_kb(dir.path());
        assert_eq!(kb.relations().len(), 6);
        assert_eq!(kb.drugs().len(), 6);
        assert_eq!(kb.genes().len(), 8);
        let drugs_in_relations: BTreeSet<_> = kb.relations().iter().map(|p| p.drug.clone()).collect();
        assert_eq!(drugs_in_relations.len(), 4);
    }

    #[test]
    fn duplicate_pair_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("relations.tsv");
        let mut f = File::create(&path).unwrap();
        writeln!(f, "drug\tgene\nD:d1\tG:g1\nD:d1\tG:g1").unwrap();
        let err = load_knowledge_base(&path, None, None, None).unwrap_err();
        assert!(matches!(err, KbError::DuplicatePair { .. }));
    }

    #[test]
    fn pair_year_before_entity_year_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let relations = dir.path().join("relations.tsv");
        let years = dir.path().join("years.tsv");
        let mut f = File::create(&relations).unwrap();
        writeln!(f, "drug\tgene\nD:d1\tG:g1").unwrap();
        let mut f = File::create(&years).unwrap();
        writeln!(f, "kind\tkey\tyear\ngene\tG:g1\t1995\npair\tD:d1|G:g1\t1990").unwrap();
        let err = load_knowledge_base(&relations, None, Some(&years), None).unwrap_err();
        assert!(matches!(err, KbError::YearOrder { pair_year: 1990, entity_year: 1995, .. }));
    }

    #[test]
    fn drug_id_in_gene_column_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("relations.tsv");
        let mut f = File::create(&path).unwrap();
        writeln!(f, "drug\tgene\nD:d1\tD:d2").unwrap();
        let err = load_knowledge_base(&path, None, None, None).unwrap_err();
        assert!(matches!(err, KbError::NamespaceMismatch { expected: "gene", .. }));
    }

    #[test]
    fn missing_prefix_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("relations.tsv");
        let mut f = File::create(&path).unwrap();
        writeln!(f, "drug\tgene\nd1\tG:g1").unwrap();
        assert!(load_knowledge_base(&path, None, None, None).is_err());
    }

    #[test]
    fn entities_up_to_year_filters_by_entity_year() {
        let dir = tempfile::tempdir().unwrap();
        let relations = dir.path().join("relations.tsv");
        let years = dir.path().join("years.tsv");
        let mut f = File::create(&relations).unwrap();
        writeln!(f, "drug\tgene\nD:d1\tG:g1\nD:d2\tG:g2").unwrap();
        let mut f = File::create(&years).unwrap();
        writeln!(f, "kind\tkey\tyear").unwrap();
        writeln!(f, "drug\tD:d1\t1980\ndrug\tD:d2\t2000\ngene\tG:g1\t1985\ngene\tG:g2\t1999").unwrap();
        let kb = load_knowledge_base(&relations, None, Some(&years), None).unwrap();
        let up_to_1990 = kb.entities_up_to_year(EntityKind::Drug, 1990);
        assert_eq!(up_to_1990.len(), 1);
        assert!(up_to_1990.contains(&EntityId::drug("d1")));
    }
}
