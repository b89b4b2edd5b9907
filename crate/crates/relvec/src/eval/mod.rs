//! Evaluation settings: query construction, metric computation, and the
//! report-producing harness.
//!
//! A setting fixes four things: which entities are queried, which answer set
//! counts as correct, which candidates are ranked, and which relation subset
//! feeds the estimator. Pathway-scoped settings pool one query instance per
//! (pathway, entity); year-scoped settings slice the relation set by
//! first-appearance years and estimate from the known (at-or-before the
//! slice year) half.

mod harness;
mod metrics;
mod predict;
mod report;

pub use harness::{run_evaluation, run_random_baseline, EvalOptions};
pub use metrics::{mean_reciprocal_rank, top_k_accuracy};
pub use predict::{
    prediction_subset, setting_estimate, single_prediction, single_prediction_full,
    single_prediction_with_estimate,
};
pub use report::{EvalReport, ReportRow, RowDiagnostics};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::{EmbeddingError, EmbeddingStore};
use crate::engine::EngineError;
use crate::estimator::{Direction, EstimatorError};
use crate::kb::{
    filter_pathways, pathway_entities_up_to, restrict_pathway, restrict_pathway_year, restrict_year,
    split_interval, EntityId, EntityKind, IntervalTag, KbError, KnowledgeBase, PathwayId,
    RelationSubset,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error(transparent)]
    Kb(#[from] KbError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("setting specification mismatch: {0}")]
    SpecMismatch(String),
    #[error("no queries survive vocabulary intersection")]
    NoQueries,
    #[error("rankings and answers are misaligned: {rankings} vs {answers}")]
    LengthMismatch { rankings: usize, answers: usize },
    #[error("ranking for query {query_index} contains no answer member")]
    AnswerNotInRanking { query_index: usize },
}

/// The fourteen supported settings. Primed variants query in the gene-to-drug
/// direction with the negated estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Setting {
    G,
    P1,
    P2,
    Y1,
    Y2,
    P1Y1,
    P1Y2,
    P2Y1,
    P2Y2,
    GPrime,
    P1Prime,
    P2Prime,
    Y1Prime,
    Y2Prime,
}

impl Setting {
    pub const ALL: [Setting; 14] = [
        Setting::G,
        Setting::P1,
        Setting::P2,
        Setting::Y1,
        Setting::Y2,
        Setting::P1Y1,
        Setting::P1Y2,
        Setting::P2Y1,
        Setting::P2Y2,
        Setting::GPrime,
        Setting::P1Prime,
        Setting::P2Prime,
        Setting::Y1Prime,
        Setting::Y2Prime,
    ];

    /// Command-line spelling; primes are written `p` because a quote is
    /// hostile to shells.
    pub fn cli_name(self) -> &'static str {
        match self {
            Setting::G => "G",
            Setting::P1 => "P1",
            Setting::P2 => "P2",
            Setting::Y1 => "Y1",
            Setting::Y2 => "Y2",
            Setting::P1Y1 => "P1Y1",
            Setting::P1Y2 => "P1Y2",
            Setting::P2Y1 => "P2Y1",
            Setting::P2Y2 => "P2Y2",
            Setting::GPrime => "Gp",
            Setting::P1Prime => "P1p",
            Setting::P2Prime => "P2p",
            Setting::Y1Prime => "Y1p",
            Setting::Y2Prime => "Y2p",
        }
    }

    pub fn parse_cli(s: &str) -> Option<Setting> {
        Setting::ALL.iter().copied().find(|x| x.cli_name() == s)
    }

    pub fn uses_year(self) -> bool {
        matches!(
            self,
            Setting::Y1
                | Setting::Y2
                | Setting::P1Y1
                | Setting::P1Y2
                | Setting::P2Y1
                | Setting::P2Y2
                | Setting::Y1Prime
                | Setting::Y2Prime
        )
    }

    pub fn uses_pathway(self) -> bool {
        matches!(
            self,
            Setting::P1
                | Setting::P2
                | Setting::P1Y1
                | Setting::P1Y2
                | Setting::P2Y1
                | Setting::P2Y2
                | Setting::P1Prime
                | Setting::P2Prime
        )
    }

    pub fn direction(self) -> Direction {
        match self {
            Setting::GPrime | Setting::P1Prime | Setting::P2Prime | Setting::Y1Prime | Setting::Y2Prime => {
                Direction::GeneToDrug
            }
            _ => Direction::DrugToGene,
        }
    }
}

/// Which pathways a pathway-scoped setting runs over.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PathwayScope {
    /// Pathways retained by the relatedness filter (at least the configured
    /// number of distinct related drugs and genes after vocabulary
    /// intersection).
    AllRetained,
    Explicit(Vec<PathwayId>),
}

#[derive(Debug, Clone)]
pub struct SettingSpec {
    pub setting: Setting,
    pub year: Option<i32>,
    pub pathways: PathwayScope,
    pub min_related_drugs: usize,
    pub min_related_genes: usize,
}

impl SettingSpec {
    pub fn new(setting: Setting) -> Self {
        SettingSpec {
            setting,
            year: None,
            pathways: PathwayScope::AllRetained,
            min_related_drugs: 2,
            min_related_genes: 2,
        }
    }

    pub fn with_year(mut self, year: i32) -> Self {
        self.year = Some(year);
        self
    }

    pub fn with_pathways(mut self, pathways: Vec<PathwayId>) -> Self {
        self.pathways = PathwayScope::Explicit(pathways);
        self
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        if self.setting.uses_year() && self.year.is_none() {
            return Err(EvalError::SpecMismatch(format!(
                "setting {} requires a year",
                self.setting.cli_name()
            )));
        }
        if !self.setting.uses_year() && self.year.is_some() {
            return Err(EvalError::SpecMismatch(format!(
                "setting {} does not take a year",
                self.setting.cli_name()
            )));
        }
        if !self.setting.uses_pathway() {
            if let PathwayScope::Explicit(_) = self.pathways {
                return Err(EvalError::SpecMismatch(format!(
                    "setting {} does not take a pathway scope",
                    self.setting.cli_name()
                )));
            }
        }
        Ok(())
    }
}

/// Which relation subset feeds the estimator of a query.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EstimateKey {
    Global,
    Pathway(PathwayId),
}

/// One (query, answer set, search space) triple. The search space is the
/// shared candidate universe minus this query's exclusions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryInstance {
    pub query: EntityId,
    pub answers: BTreeSet<EntityId>,
    pub excluded: BTreeSet<EntityId>,
    pub estimate_key: EstimateKey,
    pub pathway: Option<PathwayId>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedQueries {
    pub query_out_of_vocabulary: usize,
    pub empty_answer_set: usize,
    pub empty_search_space: usize,
    pub empty_estimator_subset: usize,
}

impl DroppedQueries {
    pub fn total(&self) -> usize {
        self.query_out_of_vocabulary
            + self.empty_answer_set
            + self.empty_search_space
            + self.empty_estimator_subset
    }
}

/// Everything a setting needs to run: the vocabulary-intersected queries, the
/// shared candidate universe (also the centering universe), and the relation
/// subsets and member sets behind each estimator key.
#[derive(Debug, Clone)]
pub struct QuerySet {
    pub setting: Setting,
    pub year: Option<i32>,
    pub direction: Direction,
    pub candidate_universe: Vec<EntityId>,
    pub queries: Vec<QueryInstance>,
    pub estimator_subsets: BTreeMap<EstimateKey, RelationSubset>,
    pub naive_sides: BTreeMap<EstimateKey, (BTreeSet<EntityId>, BTreeSet<EntityId>)>,
    pub pathways_in_scope: usize,
    pub dropped: DroppedQueries,
}

impl QuerySet {
    /// Materialized search space of one query (universe minus exclusions).
    pub fn search_space_of(&self, q: &QueryInstance) -> BTreeSet<EntityId> {
        self.candidate_universe
            .iter()
            .filter(|id| !q.excluded.contains(id))
            .cloned()
            .collect()
    }
}

fn in_vocab(store: &EmbeddingStore, ids: &BTreeSet<EntityId>) -> BTreeSet<EntityId> {
    ids.iter().filter(|e| store.contains(e.as_str())).cloned().collect()
}

struct Builder<'a> {
    store: &'a EmbeddingStore,
    universe_size: usize,
    queries: Vec<QueryInstance>,
    dropped: DroppedQueries,
}

impl<'a> Builder<'a> {
    /// Vocabulary-checks one candidate query and pushes it when it survives.
    fn push(
        &mut self,
        query: &EntityId,
        answers: &BTreeSet<EntityId>,
        excluded: BTreeSet<EntityId>,
        estimator_alive: bool,
        estimate_key: EstimateKey,
        pathway: Option<PathwayId>,
    ) {
        if !estimator_alive {
            self.dropped.empty_estimator_subset += 1;
            return;
        }
        if !self.store.contains(query.as_str()) {
            self.dropped.query_out_of_vocabulary += 1;
            return;
        }
        let answers = in_vocab(self.store, answers);
        if answers.is_empty() {
            self.dropped.empty_answer_set += 1;
            return;
        }
        // Exclusions are answer sets drawn from the universe, so the search
        // space empties exactly when they cover it.
        let excluded = in_vocab(self.store, &excluded);
        if excluded.len() >= self.universe_size {
            self.dropped.empty_search_space += 1;
            return;
        }
        self.queries.push(QueryInstance {
            query: query.clone(),
            answers,
            excluded,
            estimate_key,
            pathway,
        });
    }
}

/// Builds the query instances of a setting, after intersection with the
/// store vocabulary. Queries whose answer set or search space empties out are
/// dropped and counted, as are queries whose estimator subset has no
/// surviving pairs.
pub fn build_queries(
    kb: &KnowledgeBase,
    store: &EmbeddingStore,
    spec: &SettingSpec,
) -> Result<QuerySet, EvalError> {
    spec.validate()?;
    let setting = spec.setting;
    let direction = setting.direction();

    // Candidate universe: the full candidate-side entity set, year-sliced
    // when the setting is.
    let candidate_kind = match direction {
        Direction::DrugToGene => EntityKind::Gene,
        Direction::GeneToDrug => EntityKind::Drug,
    };
    let universe_set: BTreeSet<EntityId> = match (candidate_kind, spec.year) {
        (EntityKind::Gene, None) => kb.genes().clone(),
        (EntityKind::Drug, None) => kb.drugs().clone(),
        (kind, Some(y)) => kb.entities_up_to_year(kind, y),
    };
    let universe: Vec<EntityId> = universe_set
        .iter()
        .filter(|e| store.contains(e.as_str()))
        .cloned()
        .collect();
    if universe.is_empty() {
        return Err(EvalError::NoQueries);
    }

    let mut builder = Builder {
        store,
        universe_size: universe.len(),
        queries: Vec::new(),
        dropped: DroppedQueries::default(),
    };
    let mut estimator_subsets: BTreeMap<EstimateKey, RelationSubset> = BTreeMap::new();
    let mut naive_sides: BTreeMap<EstimateKey, (BTreeSet<EntityId>, BTreeSet<EntityId>)> = BTreeMap::new();
    let mut pathways_in_scope = 0usize;

    let pathway_list = |kb: &KnowledgeBase| -> Result<Vec<PathwayId>, EvalError> {
        match &spec.pathways {
            PathwayScope::AllRetained => Ok(filter_pathways(
                kb,
                Some(store),
                spec.min_related_drugs,
                spec.min_related_genes,
            )),
            PathwayScope::Explicit(list) => {
                let mut out = Vec::new();
                for p in list {
                    if kb.pathway_members(p).is_none() {
                        return Err(EvalError::Kb(KbError::UnknownPathway(p.0.clone())));
                    }
                    out.push(p.clone());
                }
                out.sort();
                out.dedup();
                Ok(out)
            }
        }
    };

    // Registers an estimator key and reports whether any of its pairs
    // survive vocabulary intersection.
    let register = |key: EstimateKey,
                        subset: RelationSubset,
                        sides: (BTreeSet<EntityId>, BTreeSet<EntityId>),
                        estimator_subsets: &mut BTreeMap<EstimateKey, RelationSubset>,
                        naive_sides: &mut BTreeMap<EstimateKey, (BTreeSet<EntityId>, BTreeSet<EntityId>)>|
     -> bool {
        let alive = !subset.intersect_vocabulary(store).0.is_empty();
        estimator_subsets.insert(key.clone(), subset);
        naive_sides.insert(key, sides);
        alive
    };

    match setting {
        Setting::G | Setting::GPrime => {
            let subset = kb.relation_subset();
            let alive = register(
                EstimateKey::Global,
                subset.clone(),
                (kb.drugs().clone(), kb.genes().clone()),
                &mut estimator_subsets,
                &mut naive_sides,
            );
            let answers = match setting {
                Setting::G => subset.answers_by_drug(),
                _ => subset.answers_by_gene(),
            };
            for (q, ans) in &answers {
                builder.push(q, ans, BTreeSet::new(), alive, EstimateKey::Global, None);
            }
        }
        Setting::P1 | Setting::P2 | Setting::P1Prime | Setting::P2Prime => {
            let global = kb.relation_subset();
            let global_by_drug = global.answers_by_drug();
            let global_by_gene = global.answers_by_gene();
            for p in pathway_list(kb)? {
                pathways_in_scope += 1;
                let members = kb.pathway_members(&p).expect("validated").clone();
                let restricted = restrict_pathway(kb, &p)?;
                let key = EstimateKey::Pathway(p.clone());
                let alive = register(
                    key.clone(),
                    restricted.clone(),
                    (members.drugs.clone(), members.genes.clone()),
                    &mut estimator_subsets,
                    &mut naive_sides,
                );
                match setting {
                    Setting::P1 => {
                        for (d, ans) in &restricted.answers_by_drug() {
                            builder.push(d, ans, BTreeSet::new(), alive, key.clone(), Some(p.clone()));
                        }
                    }
                    Setting::P2 => {
                        for d in &members.drugs {
                            if let Some(ans) = global_by_drug.get(d) {
                                builder.push(d, ans, BTreeSet::new(), alive, key.clone(), Some(p.clone()));
                            }
                        }
                    }
                    Setting::P1Prime => {
                        for (g, ans) in &restricted.answers_by_gene() {
                            builder.push(g, ans, BTreeSet::new(), alive, key.clone(), Some(p.clone()));
                        }
                    }
                    Setting::P2Prime => {
                        for g in &members.genes {
                            if let Some(ans) = global_by_gene.get(g) {
                                builder.push(g, ans, BTreeSet::new(), alive, key.clone(), Some(p.clone()));
                            }
                        }
                    }
                    _ => unreachable!(),
                }
            }
        }
        Setting::Y1 | Setting::Y2 | Setting::Y1Prime | Setting::Y2Prime => {
            let year = spec.year.expect("validated");
            let sliced = restrict_year(kb, year)?;
            let known = split_interval(kb, &sliced, year, IntervalTag::Lower)?;
            let unknown = split_interval(kb, &sliced, year, IntervalTag::Upper)?;
            let alive = register(
                EstimateKey::Global,
                known.clone(),
                (
                    kb.entities_up_to_year(EntityKind::Drug, year),
                    kb.entities_up_to_year(EntityKind::Gene, year),
                ),
                &mut estimator_subsets,
                &mut naive_sides,
            );
            match setting {
                Setting::Y1 => {
                    for (d, ans) in &unknown.answers_by_drug() {
                        let excluded = known.answer_genes(d);
                        builder.push(d, ans, excluded, alive, EstimateKey::Global, None);
                    }
                }
                Setting::Y2 => {
                    for (d, ans) in &sliced.answers_by_drug() {
                        builder.push(d, ans, BTreeSet::new(), alive, EstimateKey::Global, None);
                    }
                }
                Setting::Y1Prime => {
                    for (g, ans) in &unknown.answers_by_gene() {
                        let excluded = known.answer_drugs(g);
                        builder.push(g, ans, excluded, alive, EstimateKey::Global, None);
                    }
                }
                Setting::Y2Prime => {
                    for (g, ans) in &sliced.answers_by_gene() {
                        builder.push(g, ans, BTreeSet::new(), alive, EstimateKey::Global, None);
                    }
                }
                _ => unreachable!(),
            }
        }
        Setting::P1Y1 | Setting::P1Y2 | Setting::P2Y1 | Setting::P2Y2 => {
            let year = spec.year.expect("validated");
            let sliced = restrict_year(kb, year)?;
            let global_known = split_interval(kb, &sliced, year, IntervalTag::Lower)?;
            let global_unknown = split_interval(kb, &sliced, year, IntervalTag::Upper)?;
            let global_by_drug = sliced.answers_by_drug();
            let unknown_by_drug = global_unknown.answers_by_drug();
            for p in pathway_list(kb)? {
                pathways_in_scope += 1;
                let restricted = restrict_pathway_year(kb, &p, year)?;
                let known_p = split_interval(kb, &restricted, year, IntervalTag::Lower)?;
                let unknown_p = split_interval(kb, &restricted, year, IntervalTag::Upper)?;
                let member_drugs = pathway_entities_up_to(kb, &p, EntityKind::Drug, Some(year))?;
                let member_genes = pathway_entities_up_to(kb, &p, EntityKind::Gene, Some(year))?;
                let key = EstimateKey::Pathway(p.clone());
                let alive = register(
                    key.clone(),
                    known_p.clone(),
                    (member_drugs.clone(), member_genes),
                    &mut estimator_subsets,
                    &mut naive_sides,
                );
                match setting {
                    Setting::P1Y1 => {
                        for (d, ans) in &unknown_p.answers_by_drug() {
                            let excluded = known_p.answer_genes(d);
                            builder.push(d, ans, excluded, alive, key.clone(), Some(p.clone()));
                        }
                    }
                    Setting::P1Y2 => {
                        for (d, ans) in &restricted.answers_by_drug() {
                            builder.push(d, ans, BTreeSet::new(), alive, key.clone(), Some(p.clone()));
                        }
                    }
                    Setting::P2Y1 => {
                        for d in &member_drugs {
                            if let Some(ans) = unknown_by_drug.get(d) {
                                let excluded = global_known.answer_genes(d);
                                builder.push(d, ans, excluded, alive, key.clone(), Some(p.clone()));
                            }
                        }
                    }
                    Setting::P2Y2 => {
                        for d in &member_drugs {
                            if let Some(ans) = global_by_drug.get(d) {
                                builder.push(d, ans, BTreeSet::new(), alive, key.clone(), Some(p.clone()));
                            }
                        }
                    }
                    _ => unreachable!(),
                }
            }
        }
    }

    if builder.queries.is_empty() {
        log::warn!(
            "setting {}: no queries survive ({:?})",
            setting.cli_name(),
            builder.dropped
        );
        return Err(EvalError::NoQueries);
    }

    Ok(QuerySet {
        setting,
        year: spec.year,
        direction,
        candidate_universe: universe,
        queries: builder.queries,
        estimator_subsets,
        naive_sides,
        pathways_in_scope,
        dropped: builder.dropped,
    })
}
