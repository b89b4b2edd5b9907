//! Single-query prediction under a setting: picks the estimator subset, the
//! candidate universe, and the per-query exclusions the setting implies, then
//! ranks the top-k candidates.

use std::collections::BTreeSet;

use crate::embedding::EmbeddingStore;
use crate::engine::predict_top_k;
use crate::engine::RankedPrediction;
use crate::estimator::{estimate_naive, estimate_paired, Direction, Method, RelationEstimate};
use crate::kb::{
    pathway_entities_up_to, restrict_pathway, restrict_pathway_year, restrict_year, split_interval,
    EntityId, EntityKind, IntervalTag, KnowledgeBase, PathwayId, RelationSubset, Scope,
};

use super::{EvalError, PathwayScope, Setting, SettingSpec};

fn kind_name(kind: EntityKind) -> &'static str {
    match kind {
        EntityKind::Drug => "drug",
        EntityKind::Gene => "gene",
    }
}

fn single_pathway(spec: &SettingSpec) -> Result<Option<PathwayId>, EvalError> {
    let pathway = match &spec.pathways {
        PathwayScope::Explicit(list) if list.len() == 1 => Some(list[0].clone()),
        PathwayScope::Explicit(_) => {
            return Err(EvalError::SpecMismatch(
                "single-query prediction takes exactly one pathway".into(),
            ))
        }
        PathwayScope::AllRetained => None,
    };
    if spec.setting.uses_pathway() && pathway.is_none() {
        return Err(EvalError::SpecMismatch(format!(
            "setting {} needs a pathway for prediction",
            spec.setting.cli_name()
        )));
    }
    Ok(pathway)
}

/// The relation subset a setting prescribes for its estimator: the
/// unrestricted set, the pathway restriction, or the known half of a year
/// slice. Pathway settings need a single explicit pathway in the spec.
pub fn prediction_subset(kb: &KnowledgeBase, spec: &SettingSpec) -> Result<RelationSubset, EvalError> {
    let pathway = single_pathway(spec)?;
    Ok(match (spec.setting.uses_pathway(), spec.year) {
        (false, None) => kb.relation_subset(),
        (true, None) => restrict_pathway(kb, pathway.as_ref().unwrap())?,
        (false, Some(y)) => {
            let sliced = restrict_year(kb, y)?;
            split_interval(kb, &sliced, y, IntervalTag::Lower)?
        }
        (true, Some(y)) => {
            let sliced = restrict_pathway_year(kb, pathway.as_ref().unwrap(), y)?;
            split_interval(kb, &sliced, y, IntervalTag::Lower)?
        }
    })
}

/// The estimator subset, candidate universe, and excluded candidates implied
/// by `spec` for a single query entity.
pub(crate) fn prediction_context(
    kb: &KnowledgeBase,
    spec: &SettingSpec,
    query: &EntityId,
) -> Result<(RelationSubset, BTreeSet<EntityId>, BTreeSet<EntityId>), EvalError> {
    let setting = spec.setting;
    let pathway = single_pathway(spec)?;
    let subset = prediction_subset(kb, spec)?;

    let candidate_kind = match setting.direction() {
        Direction::DrugToGene => EntityKind::Gene,
        Direction::GeneToDrug => EntityKind::Drug,
    };
    let universe = match spec.year {
        None => match candidate_kind {
            EntityKind::Gene => kb.genes().clone(),
            EntityKind::Drug => kb.drugs().clone(),
        },
        Some(y) => kb.entities_up_to_year(candidate_kind, y),
    };

    // Settings that predict strictly new relations exclude the query's
    // already-known answers from the search space.
    let excluded = match (setting, spec.year) {
        (Setting::Y1 | Setting::Y1Prime | Setting::P2Y1, Some(y)) => {
            let sliced = restrict_year(kb, y)?;
            let known = split_interval(kb, &sliced, y, IntervalTag::Lower)?;
            match setting {
                Setting::Y1Prime => known.answer_drugs(query),
                _ => known.answer_genes(query),
            }
        }
        (Setting::P1Y1, Some(y)) => {
            let sliced = restrict_pathway_year(kb, pathway.as_ref().unwrap(), y)?;
            let known = split_interval(kb, &sliced, y, IntervalTag::Lower)?;
            known.answer_genes(query)
        }
        _ => BTreeSet::new(),
    };
    Ok((subset, universe, excluded))
}

/// Builds the relation estimate a setting prescribes for the given subset,
/// reversing it for gene-to-drug settings.
pub fn setting_estimate(
    store: &EmbeddingStore,
    kb: &KnowledgeBase,
    spec: &SettingSpec,
    subset: &RelationSubset,
    method: Method,
) -> Result<RelationEstimate, EvalError> {
    let estimate = match method {
        Method::Paired => estimate_paired(store, subset)?.0,
        Method::Naive => {
            let (drugs, genes) = match subset.scope() {
                Scope::Global => (kb.drugs().clone(), kb.genes().clone()),
                Scope::Year { year } => (
                    kb.entities_up_to_year(EntityKind::Drug, *year),
                    kb.entities_up_to_year(EntityKind::Gene, *year),
                ),
                Scope::Pathway { pathway } => {
                    let members = pathway_members(kb, pathway)?;
                    (members.0, members.1)
                }
                Scope::PathwayYear { pathway, year } => (
                    pathway_entities_up_to(kb, pathway, EntityKind::Drug, Some(*year))?,
                    pathway_entities_up_to(kb, pathway, EntityKind::Gene, Some(*year))?,
                ),
            };
            estimate_naive(
                store,
                drugs.iter(),
                genes.iter(),
                subset.scope().clone(),
                subset.interval(),
            )?
            .0
        }
    };
    Ok(match spec.setting.direction() {
        Direction::DrugToGene => estimate,
        Direction::GeneToDrug => estimate.reversed(),
    })
}

fn pathway_members(
    kb: &KnowledgeBase,
    pathway: &PathwayId,
) -> Result<(BTreeSet<EntityId>, BTreeSet<EntityId>), EvalError> {
    let members = kb
        .pathway_members(pathway)
        .ok_or_else(|| EvalError::Kb(crate::kb::KbError::UnknownPathway(pathway.0.clone())))?;
    Ok((members.drugs.clone(), members.genes.clone()))
}

/// Ranks the top-k candidates for one query entity under a setting.
///
/// The query must be on the setting's query side (a drug for gene prediction,
/// a gene for the reversed settings) but does not need to appear in any
/// relation.
pub fn single_prediction(
    kb: &KnowledgeBase,
    store: &EmbeddingStore,
    spec: &SettingSpec,
    query: &EntityId,
    k: usize,
    method: Method,
    centering: bool,
) -> Result<RankedPrediction, EvalError> {
    run_single(kb, store, spec, query, k, None, method, centering).map(|(p, _)| p)
}

/// Like [`single_prediction`] but scores with a previously exported estimate
/// instead of recomputing one. The estimate's direction must match the
/// setting's.
pub fn single_prediction_with_estimate(
    kb: &KnowledgeBase,
    store: &EmbeddingStore,
    spec: &SettingSpec,
    query: &EntityId,
    k: usize,
    estimate: &RelationEstimate,
    centering: bool,
) -> Result<RankedPrediction, EvalError> {
    run_single(
        kb,
        store,
        spec,
        query,
        k,
        Some(estimate.clone()),
        estimate.method,
        centering,
    )
    .map(|(p, _)| p)
}

/// Shared single-query pipeline; returns the ranking and the estimate that
/// scored it so callers can export the latter.
pub fn single_prediction_full(
    kb: &KnowledgeBase,
    store: &EmbeddingStore,
    spec: &SettingSpec,
    query: &EntityId,
    k: usize,
    method: Method,
    centering: bool,
) -> Result<(RankedPrediction, RelationEstimate), EvalError> {
    run_single(kb, store, spec, query, k, None, method, centering)
}

#[allow(clippy::too_many_arguments)]
fn run_single(
    kb: &KnowledgeBase,
    store: &EmbeddingStore,
    spec: &SettingSpec,
    query: &EntityId,
    k: usize,
    supplied: Option<RelationEstimate>,
    method: Method,
    centering: bool,
) -> Result<(RankedPrediction, RelationEstimate), EvalError> {
    spec.validate()?;
    let expected_kind = match spec.setting.direction() {
        Direction::DrugToGene => EntityKind::Drug,
        Direction::GeneToDrug => EntityKind::Gene,
    };
    if query.kind() != expected_kind {
        return Err(EvalError::SpecMismatch(format!(
            "setting {} queries {} entities, but {} is a {}",
            spec.setting.cli_name(),
            kind_name(expected_kind),
            query,
            kind_name(query.kind()),
        )));
    }

    let (subset, universe, excluded) = prediction_context(kb, spec, query)?;
    let universe: BTreeSet<EntityId> = universe
        .into_iter()
        .filter(|id| store.contains(id.as_str()))
        .collect();
    let space: BTreeSet<EntityId> = universe.difference(&excluded).cloned().collect();

    let estimate = match supplied {
        Some(estimate) => {
            if estimate.direction != spec.setting.direction() {
                return Err(EvalError::SpecMismatch(format!(
                    "supplied estimate points {:?} but setting {} needs {:?}",
                    estimate.direction,
                    spec.setting.cli_name(),
                    spec.setting.direction(),
                )));
            }
            estimate
        }
        None => setting_estimate(store, kb, spec, &subset, method)?,
    };
    let center = if centering {
        store.mean_vector(universe.iter().map(|id| id.as_str()))?
    } else {
        vec![0.0; store.dim()]
    };
    let prediction = predict_top_k(store, query, &estimate, &space, &center, k)?;
    Ok((prediction, estimate))
}
