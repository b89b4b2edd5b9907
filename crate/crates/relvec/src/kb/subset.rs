//! Relation subsets: pathway and year restrictions, known/unknown interval
//! splits, projections onto entity sets, and per-entity answer sets.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{EntityId, EntityKind, KbError, KnowledgeBase, PathwayId, RelationPair};
use crate::embedding::EmbeddingStore;

/// Which restriction produced a subset.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Scope {
    Global,
    Pathway { pathway: PathwayId },
    Year { year: i32 },
    PathwayYear { pathway: PathwayId, year: i32 },
}

impl Scope {
    pub fn year(&self) -> Option<i32> {
        match self {
            Scope::Year { year } | Scope::PathwayYear { year, .. } => Some(*year),
            _ => None,
        }
    }
}

/// Interval tag for subsets split by first-co-appearance year: pairs at or
/// before the slice year (`Lower`), strictly after it (`Upper`), or unsplit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum IntervalTag {
    #[serde(rename = "full")]
    Full,
    #[serde(rename = "L")]
    Lower,
    #[serde(rename = "U")]
    Upper,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationSubset {
    pairs: BTreeSet<RelationPair>,
    scope: Scope,
    interval: IntervalTag,
}

impl RelationSubset {
    pub(crate) fn new(pairs: BTreeSet<RelationPair>, scope: Scope, interval: IntervalTag) -> Self {
        RelationSubset {
            pairs,
            scope,
            interval,
        }
    }

    pub fn pairs(&self) -> &BTreeSet<RelationPair> {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn scope(&self) -> &Scope {
        &self.scope
    }

    pub fn interval(&self) -> IntervalTag {
        self.interval
    }

    /// Drugs that occur on the left of at least one pair.
    pub fn project_drugs(&self) -> BTreeSet<EntityId> {
        self.pairs.iter().map(|p| p.drug.clone()).collect()
    }

    /// Genes that occur on the right of at least one pair.
    pub fn project_genes(&self) -> BTreeSet<EntityId> {
        self.pairs.iter().map(|p| p.gene.clone()).collect()
    }

    /// Genes related to `d` within this subset. Unknown entities yield the
    /// empty set.
    pub fn answer_genes(&self, d: &EntityId) -> BTreeSet<EntityId> {
        self.pairs
            .iter()
            .filter(|p| &p.drug == d)
            .map(|p| p.gene.clone())
            .collect()
    }

    /// Drugs related to `g` within this subset.
    pub fn answer_drugs(&self, g: &EntityId) -> BTreeSet<EntityId> {
        self.pairs
            .iter()
            .filter(|p| &p.gene == g)
            .map(|p| p.drug.clone())
            .collect()
    }

    /// Answer sets for every drug in one pass.
    pub fn answers_by_drug(&self) -> BTreeMap<EntityId, BTreeSet<EntityId>> {
        let mut map: BTreeMap<EntityId, BTreeSet<EntityId>> = BTreeMap::new();
        for p in &self.pairs {
            map.entry(p.drug.clone()).or_default().insert(p.gene.clone());
        }
        map
    }

    /// Answer sets for every gene in one pass.
    pub fn answers_by_gene(&self) -> BTreeMap<EntityId, BTreeSet<EntityId>> {
        let mut map: BTreeMap<EntityId, BTreeSet<EntityId>> = BTreeMap::new();
        for p in &self.pairs {
            map.entry(p.gene.clone()).or_default().insert(p.drug.clone());
        }
        map
    }

    /// Pairs whose two entities are both in the store vocabulary, keeping
    /// scope and interval. Returns the surviving subset and the dropped count.
    pub fn intersect_vocabulary(&self, store: &EmbeddingStore) -> (RelationSubset, usize) {
        let pairs: BTreeSet<RelationPair> = self
            .pairs
            .iter()
            .filter(|p| store.contains(p.drug.as_str()) && store.contains(p.gene.as_str()))
            .cloned()
            .collect();
        let dropped = self.pairs.len() - pairs.len();
        (
            RelationSubset {
                pairs,
                scope: self.scope.clone(),
                interval: self.interval,
            },
            dropped,
        )
    }
}

/// Pairs whose drug and gene both belong to pathway `p`'s member sets.
pub fn restrict_pathway(kb: &KnowledgeBase, p: &PathwayId) -> Result<RelationSubset, KbError> {
    let members = kb
        .pathway_members(p)
        .ok_or_else(|| KbError::UnknownPathway(p.0.clone()))?;
    let pairs = kb
        .relations()
        .iter()
        .filter(|pair| members.drugs.contains(&pair.drug) && members.genes.contains(&pair.gene))
        .cloned()
        .collect();
    Ok(RelationSubset::new(
        pairs,
        Scope::Pathway { pathway: p.clone() },
        IntervalTag::Full,
    ))
}

/// Pairs whose drug and gene each first appeared up to `year`. Pairs whose
/// entities have no recorded year cannot be ordered and are left out (with a
/// warning).
pub fn restrict_year(kb: &KnowledgeBase, year: i32) -> Result<RelationSubset, KbError> {
    if !kb.has_years() {
        return Err(KbError::YearsNotLoaded);
    }
    let mut missing = 0usize;
    let pairs = kb
        .relations()
        .iter()
        .filter(|pair| {
            match (kb.entity_year(&pair.drug), kb.entity_year(&pair.gene)) {
                (Some(yd), Some(yg)) => yd <= year && yg <= year,
                _ => {
                    missing += 1;
                    false
                }
            }
        })
        .cloned()
        .collect();
    if missing > 0 {
        log::warn!("restrict_year({year}): {missing} pairs excluded for missing entity years");
    }
    Ok(RelationSubset::new(
        pairs,
        Scope::Year { year },
        IntervalTag::Full,
    ))
}

/// Year-sliced pathway restriction: pairs of `R^year` whose drug and gene are
/// pathway members that appeared up to `year`.
pub fn restrict_pathway_year(
    kb: &KnowledgeBase,
    p: &PathwayId,
    year: i32,
) -> Result<RelationSubset, KbError> {
    let members = kb
        .pathway_members(p)
        .ok_or_else(|| KbError::UnknownPathway(p.0.clone()))?;
    let sliced = restrict_year(kb, year)?;
    let pairs = sliced
        .pairs()
        .iter()
        .filter(|pair| members.drugs.contains(&pair.drug) && members.genes.contains(&pair.gene))
        .cloned()
        .collect();
    Ok(RelationSubset::new(
        pairs,
        Scope::PathwayYear {
            pathway: p.clone(),
            year,
        },
        IntervalTag::Full,
    ))
}

/// Splits a subset by first-co-appearance year: `Lower` keeps pairs with
/// `pair_year <= year`, `Upper` keeps the rest. Every member must carry a
/// pair year.
pub fn split_interval(
    kb: &KnowledgeBase,
    subset: &RelationSubset,
    year: i32,
    which: IntervalTag,
) -> Result<RelationSubset, KbError> {
    assert!(which != IntervalTag::Full, "split requires Lower or Upper");
    let mut pairs = BTreeSet::new();
    for pair in subset.pairs() {
        let pair_year = kb.pair_year(pair).ok_or_else(|| KbError::MissingPairYear {
            drug: pair.drug.as_str().to_string(),
            gene: pair.gene.as_str().to_string(),
        })?;
        let keep = match which {
            IntervalTag::Lower => pair_year <= year,
            IntervalTag::Upper => pair_year > year,
            IntervalTag::Full => unreachable!(),
        };
        if keep {
            pairs.insert(pair.clone());
        }
    }
    Ok(RelationSubset::new(pairs, subset.scope().clone(), which))
}

/// Pathways whose restricted relation set touches at least
/// `min_related_drugs` distinct drugs and `min_related_genes` distinct genes.
/// When a store is given, pairs are first intersected with its vocabulary, so
/// the retained set depends on the embedding in use.
pub fn filter_pathways(
    kb: &KnowledgeBase,
    store: Option<&EmbeddingStore>,
    min_related_drugs: usize,
    min_related_genes: usize,
) -> Vec<PathwayId> {
    kb.pathway_ids()
        .filter(|p| {
            let subset = restrict_pathway(kb, p).expect("iterating known pathways");
            let subset = match store {
                Some(s) => subset.intersect_vocabulary(s).0,
                None => subset,
            };
            subset.project_drugs().len() >= min_related_drugs
                && subset.project_genes().len() >= min_related_genes
        })
        .cloned()
        .collect()
}

/// Entities of `kind` that appear in pathway `p` and (when a year is given)
/// first appeared up to that year.
pub fn pathway_entities_up_to(
    kb: &KnowledgeBase,
    p: &PathwayId,
    kind: EntityKind,
    year: Option<i32>,
) -> Result<BTreeSet<EntityId>, KbError> {
    let members = kb
        .pathway_members(p)
        .ok_or_else(|| KbError::UnknownPathway(p.0.clone()))?;
    let base = match kind {
        EntityKind::Drug => &members.drugs,
        EntityKind::Gene => &members.genes,
    };
    Ok(match year {
        None => base.clone(),
        Some(y) => base
            .iter()
            .filter(|e| matches!(kb.entity_year(e), Some(ey) if ey <= y))
            .cloned()
            .collect(),
    })
}
