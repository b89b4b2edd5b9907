//! Runs a setting end to end: estimator, per-query ranking, micro-averaged
//! metrics. Queries fan out over a worker pool; every per-query value is
//! computed independently and reduced in query order, so the report is
//! identical for any worker count.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::embedding::EmbeddingStore;
use crate::engine::{shuffle_indices, CandidateIndex};
use crate::estimator::{estimate_naive, estimate_paired, Direction, Method, RelationEstimate};
use crate::kb::KnowledgeBase;

use super::report::{EvalReport, ReportRow, RowDiagnostics};
use super::{build_queries, EstimateKey, EvalError, QuerySet, SettingSpec};

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub estimator: Method,
    pub centering: bool,
    pub workers: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            estimator: Method::Paired,
            centering: true,
            workers: 0, // 0 = all available cores
        }
    }
}

struct PerQuery {
    top1: bool,
    top10: bool,
    reciprocal_rank: f64,
}

fn thread_pool(workers: usize) -> Result<rayon::ThreadPool, EvalError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| EvalError::SpecMismatch(format!("cannot build worker pool: {e}")))
}

fn context_string(qs: &QuerySet) -> String {
    let mut parts = Vec::new();
    if let Some(y) = qs.year {
        parts.push(format!("year={y}"));
    }
    if qs.setting.uses_pathway() {
        parts.push(format!("pathways={}", qs.pathways_in_scope));
    }
    if parts.is_empty() {
        "global".to_string()
    } else {
        parts.join(";")
    }
}

fn center_vector(store: &EmbeddingStore, qs: &QuerySet, centering: bool) -> Result<Vec<f64>, EvalError> {
    if centering {
        Ok(store.mean_vector(qs.candidate_universe.iter().map(|id| id.as_str()))?)
    } else {
        Ok(vec![0.0; store.dim()])
    }
}

fn estimates_for(
    store: &EmbeddingStore,
    qs: &QuerySet,
    method: Method,
) -> Result<(BTreeMap<EstimateKey, RelationEstimate>, usize), EvalError> {
    let mut estimates = BTreeMap::new();
    let mut dropped_pairs = 0usize;
    for (key, subset) in &qs.estimator_subsets {
        // Keys whose subsets die in vocabulary intersection were already
        // dropped with their queries.
        if subset.intersect_vocabulary(store).0.is_empty() {
            continue;
        }
        let estimate = match method {
            Method::Paired => {
                let (estimate, dropped) = estimate_paired(store, subset)?;
                dropped_pairs += dropped;
                estimate
            }
            Method::Naive => {
                let (drugs, genes) = qs.naive_sides.get(key).expect("registered together");
                let (estimate, _) = estimate_naive(
                    store,
                    drugs.iter(),
                    genes.iter(),
                    subset.scope().clone(),
                    subset.interval(),
                )?;
                estimate
            }
        };
        let estimate = match qs.direction {
            Direction::DrugToGene => estimate,
            Direction::GeneToDrug => estimate.reversed(),
        };
        estimates.insert(key.clone(), estimate);
    }
    Ok((estimates, dropped_pairs))
}

fn aggregate(results: Vec<PerQuery>) -> (usize, f64, f64, f64) {
    let n = results.len();
    let mut top1 = 0.0;
    let mut top10 = 0.0;
    let mut mrr = 0.0;
    for r in &results {
        if r.top1 {
            top1 += 1.0;
        }
        if r.top10 {
            top10 += 1.0;
        }
        mrr += r.reciprocal_rank;
    }
    (n, top1 / n as f64, top10 / n as f64, mrr / n as f64)
}

/// Evaluates a setting with the requested estimator and centering, micro-
/// averaging top-1, top-10, and MRR over all query instances.
pub fn run_evaluation(
    kb: &KnowledgeBase,
    store: &EmbeddingStore,
    spec: &SettingSpec,
    options: &EvalOptions,
) -> Result<EvalReport, EvalError> {
    let qs = build_queries(kb, store, spec)?;
    let center = center_vector(store, &qs, options.centering)?;
    let (estimates, estimator_dropped_pairs) = estimates_for(store, &qs, options.estimator)?;
    let index = CandidateIndex::build(store, qs.candidate_universe.iter().cloned(), &center)?;

    let pool = thread_pool(options.workers)?;
    let results: Result<Vec<PerQuery>, EvalError> = pool.install(|| {
        qs.queries
            .par_iter()
            .map(|q| {
                let estimate = estimates.get(&q.estimate_key).expect("alive keys only");
                let rank = index
                    .first_hit_rank(store, &q.query, estimate, &center, &q.excluded, &q.answers)?
                    .ok_or(EvalError::AnswerNotInRanking { query_index: 0 })?;
                Ok(PerQuery {
                    top1: rank <= 1,
                    top10: rank <= 10,
                    reciprocal_rank: 1.0 / rank as f64,
                })
            })
            .collect()
    });
    let (n_queries, top1, top10, mrr) = aggregate(results?);

    let method = match options.estimator {
        Method::Paired => "paired",
        Method::Naive => "naive",
    };
    Ok(EvalReport {
        rows: vec![ReportRow {
            setting: qs.setting.cli_name().to_string(),
            context: context_string(&qs),
            method: method.to_string(),
            centering: options.centering,
            n_queries,
            top1,
            top10,
            mrr,
            n_repeats: None,
            seeds: None,
            diagnostics: RowDiagnostics {
                dropped_queries: qs.dropped,
                estimator_dropped_pairs,
                candidate_universe: qs.candidate_universe.len(),
                pathways_in_scope: qs.pathways_in_scope,
            },
        }],
    })
}

/// Mixes a repeat seed with a query index into an independent stream seed.
fn mix_seed(repeat_seed: u64, query_index: usize) -> u64 {
    let mut z = repeat_seed
        .wrapping_add(0x9e3779b97f4a7c15)
        .wrapping_add((query_index as u64).wrapping_mul(0xbf58476d1ce4e5b9));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Random-permutation baseline: metrics averaged over `n_repeats` runs with
/// seeds `base_seed..base_seed + n_repeats`. Deterministic for fixed seeds
/// and independent of the worker count.
pub fn run_random_baseline(
    kb: &KnowledgeBase,
    store: &EmbeddingStore,
    spec: &SettingSpec,
    n_repeats: usize,
    base_seed: u64,
    workers: usize,
) -> Result<EvalReport, EvalError> {
    if n_repeats == 0 {
        return Err(EvalError::SpecMismatch("baseline needs at least one repeat".into()));
    }
    let qs = build_queries(kb, store, spec)?;
    let universe = &qs.candidate_universe;

    let pool = thread_pool(workers)?;
    let mut repeat_metrics = Vec::with_capacity(n_repeats);
    let seeds: Vec<u64> = (0..n_repeats as u64).map(|i| base_seed + i).collect();
    for &seed in &seeds {
        let results: Result<Vec<PerQuery>, EvalError> = pool.install(|| {
            qs.queries
                .par_iter()
                .enumerate()
                .map(|(qi, q)| {
                    let perm = shuffle_indices(universe.len(), mix_seed(seed, qi));
                    let mut rank = 0usize;
                    let mut hit = None;
                    for &i in &perm {
                        let id = &universe[i as usize];
                        if q.excluded.contains(id) {
                            continue;
                        }
                        rank += 1;
                        if q.answers.contains(id) {
                            hit = Some(rank);
                            break;
                        }
                    }
                    let rank = hit.ok_or(EvalError::AnswerNotInRanking { query_index: qi })?;
                    Ok(PerQuery {
                        top1: rank <= 1,
                        top10: rank <= 10,
                        reciprocal_rank: 1.0 / rank as f64,
                    })
                })
                .collect()
        });
        repeat_metrics.push(aggregate(results?));
    }

    let n_queries = repeat_metrics[0].0;
    let mean_of = |f: fn(&(usize, f64, f64, f64)) -> f64| {
        repeat_metrics.iter().map(f).sum::<f64>() / repeat_metrics.len() as f64
    };
    Ok(EvalReport {
        rows: vec![ReportRow {
            setting: qs.setting.cli_name().to_string(),
            context: context_string(&qs),
            method: "random".to_string(),
            centering: false,
            n_queries,
            top1: mean_of(|m| m.1),
            top10: mean_of(|m| m.2),
            mrr: mean_of(|m| m.3),
            n_repeats: Some(n_repeats),
            seeds: Some(seeds),
            diagnostics: RowDiagnostics {
                dropped_queries: qs.dropped,
                estimator_dropped_pairs: 0,
                candidate_universe: universe.len(),
                pathways_in_scope: qs.pathways_in_scope,
            },
        }],
    })
}
