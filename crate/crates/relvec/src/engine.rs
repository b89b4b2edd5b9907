//! Ranking of candidate entities by centered cosine similarity to
//! `u_query + v`.

use std::collections::BTreeSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

use crate::embedding::EmbeddingStore;
use crate::estimator::RelationEstimate;
use crate::kb::EntityId;
use crate::numeric;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("query {0:?} is not in the vocabulary")]
    UnknownQuery(String),
    #[error("search-space member {0:?} is not in the vocabulary")]
    UnknownCandidate(String),
    #[error("search space is empty")]
    EmptySearchSpace,
    #[error("centered query vector is zero")]
    DegenerateQuery,
    #[error("estimate dimension {estimate} does not match store dimension {store}")]
    DimensionMismatch { estimate: usize, store: usize },
}

/// A full ordering of a search space for one query, scores descending.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedPrediction {
    /// The query entity; absent for the random baseline, where no query
    /// embedding is involved.
    pub query: Option<EntityId>,
    /// Candidates sorted by score descending, ties broken by ascending id.
    pub ordered: Vec<(EntityId, f64)>,
    /// The centering vector the scores were computed against.
    pub center: Vec<f64>,
}

impl RankedPrediction {
    /// 1-based rank of the first candidate in `answers`, if any.
    pub fn first_hit_rank(&self, answers: &BTreeSet<EntityId>) -> Option<usize> {
        self.ordered
            .iter()
            .position(|(id, _)| answers.contains(id))
            .map(|p| p + 1)
    }
}

/// Candidate ids with their centered embeddings and norms, shared across the
/// queries of one evaluation setting.
pub struct CandidateIndex {
    ids: Vec<EntityId>,
    centered: Vec<f64>,
    norms: Vec<f64>,
    dim: usize,
}

impl CandidateIndex {
    /// Prepares centered candidate rows. Ids are sorted; every member must be
    /// in the vocabulary.
    pub fn build(
        store: &EmbeddingStore,
        candidates: impl IntoIterator<Item = EntityId>,
        center: &[f64],
    ) -> Result<Self, EngineError> {
        let mut ids: Vec<EntityId> = candidates.into_iter().collect();
        ids.sort();
        ids.dedup();
        if ids.is_empty() {
            return Err(EngineError::EmptySearchSpace);
        }
        let dim = store.dim();
        let mut centered = Vec::with_capacity(ids.len() * dim);
        let mut norms = Vec::with_capacity(ids.len());
        for id in &ids {
            let row = store
                .vector_of(id.as_str())
                .ok_or_else(|| EngineError::UnknownCandidate(id.as_str().to_string()))?;
            let start = centered.len();
            for (x, m) in row.iter().zip(center.iter()) {
                centered.push(x - m);
            }
            norms.push(numeric::norm(&centered[start..]));
        }
        Ok(CandidateIndex {
            ids,
            centered,
            norms,
            dim,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[EntityId] {
        &self.ids
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.centered[i * self.dim..(i + 1) * self.dim]
    }

    /// Centered query vector `u_query + estimate - center` and its norm.
    ///
    /// The intermediate sum `u_query + estimate` is materialized first so the
    /// scores stay bit-identical to `centered_cosine(u_query + estimate,
    /// u_candidate, center)` computed independently.
    fn centered_query(
        &self,
        store: &EmbeddingStore,
        query: &EntityId,
        estimate: &RelationEstimate,
        center: &[f64],
    ) -> Result<(Vec<f64>, f64), EngineError> {
        let row = store
            .vector_of(query.as_str())
            .ok_or_else(|| EngineError::UnknownQuery(query.as_str().to_string()))?;
        if estimate.vector.len() != self.dim {
            return Err(EngineError::DimensionMismatch {
                estimate: estimate.vector.len(),
                store: self.dim,
            });
        }
        let shifted: Vec<f64> = row.iter().zip(estimate.vector.iter()).map(|(u, v)| u + v).collect();
        let centered: Vec<f64> = shifted.iter().zip(center.iter()).map(|(x, m)| x - m).collect();
        let norm = numeric::norm(&centered);
        if norm == 0.0 {
            return Err(EngineError::DegenerateQuery);
        }
        Ok((centered, norm))
    }

    fn score(&self, i: usize, query: &[f64], query_norm: f64) -> f64 {
        let nb = self.norms[i];
        if nb == 0.0 {
            // A zero centered candidate has no direction; it ranks last.
            return f64::NEG_INFINITY;
        }
        numeric::dot(query, self.row(i)) / (query_norm * nb)
    }

    /// Scores every non-excluded candidate and returns the full ordering.
    pub fn rank(
        &self,
        store: &EmbeddingStore,
        query: &EntityId,
        estimate: &RelationEstimate,
        center: &[f64],
        excluded: &BTreeSet<EntityId>,
    ) -> Result<RankedPrediction, EngineError> {
        let (cq, nq) = self.centered_query(store, query, estimate, center)?;
        let mut ordered: Vec<(EntityId, f64)> = Vec::with_capacity(self.ids.len());
        for i in 0..self.ids.len() {
            if excluded.contains(&self.ids[i]) {
                continue;
            }
            ordered.push((self.ids[i].clone(), self.score(i, &cq, nq)));
        }
        if ordered.is_empty() {
            return Err(EngineError::EmptySearchSpace);
        }
        ordered.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Ok(RankedPrediction {
            query: Some(query.clone()),
            ordered,
            center: center.to_vec(),
        })
    }

    /// 1-based rank of the best-ranked answer without materializing the full
    /// ordering: the best answer's (score, id) is found first, then the
    /// candidates strictly ahead of it are counted. Equivalent to
    /// `rank(...).first_hit_rank(answers)` because both use the same score
    /// and the same (score desc, id asc) order.
    pub fn first_hit_rank(
        &self,
        store: &EmbeddingStore,
        query: &EntityId,
        estimate: &RelationEstimate,
        center: &[f64],
        excluded: &BTreeSet<EntityId>,
        answers: &BTreeSet<EntityId>,
    ) -> Result<Option<usize>, EngineError> {
        let (cq, nq) = self.centered_query(store, query, estimate, center)?;
        let mut best: Option<(f64, usize)> = None;
        for answer in answers {
            if excluded.contains(answer) {
                continue;
            }
            if let Ok(i) = self.ids.binary_search(answer) {
                let s = self.score(i, &cq, nq);
                let better = match &best {
                    None => true,
                    Some((bs, bi)) => {
                        s.total_cmp(bs).is_gt() || (s.total_cmp(bs).is_eq() && i < *bi)
                    }
                };
                if better {
                    best = Some((s, i));
                }
            }
        }
        let (best_score, best_idx) = match best {
            Some(b) => b,
            None => return Ok(None),
        };
        let mut ahead = 0usize;
        for i in 0..self.ids.len() {
            if i == best_idx || excluded.contains(&self.ids[i]) {
                continue;
            }
            let s = self.score(i, &cq, nq);
            match s.total_cmp(&best_score) {
                std::cmp::Ordering::Greater => ahead += 1,
                std::cmp::Ordering::Equal if i < best_idx => ahead += 1,
                _ => {}
            }
        }
        Ok(Some(ahead + 1))
    }
}

/// Full ordering of `search_space` for one query. The query is not removed
/// from the space; callers exclude it when their setting requires that.
pub fn rank(
    store: &EmbeddingStore,
    query: &EntityId,
    estimate: &RelationEstimate,
    search_space: &BTreeSet<EntityId>,
    center: &[f64],
) -> Result<RankedPrediction, EngineError> {
    if search_space.is_empty() {
        return Err(EngineError::EmptySearchSpace);
    }
    let index = CandidateIndex::build(store, search_space.iter().cloned(), center)?;
    index.rank(store, query, estimate, center, &BTreeSet::new())
}

/// First `k` entries of the full ranking; shorter than `k` only when the
/// search space is.
pub fn predict_top_k(
    store: &EmbeddingStore,
    query: &EntityId,
    estimate: &RelationEstimate,
    search_space: &BTreeSet<EntityId>,
    center: &[f64],
    k: usize,
) -> Result<RankedPrediction, EngineError> {
    let mut full = rank(store, query, estimate, search_space, center)?;
    full.ordered.truncate(k);
    Ok(full)
}

/// Deterministic Fisher-Yates permutation of `0..n` driven by a
/// seed-constructed stream cipher.
pub(crate) fn shuffle_indices(n: usize, seed: u64) -> Vec<u32> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut idx: Vec<u32> = (0..n as u32).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        idx.swap(i, j);
    }
    idx
}

/// Uniformly random permutation of the search space; deterministic for a
/// fixed seed. Scores are descending placeholders so the result carries a
/// full ranking like any other prediction.
pub fn random_rank(
    search_space: &BTreeSet<EntityId>,
    seed: u64,
) -> Result<RankedPrediction, EngineError> {
    if search_space.is_empty() {
        return Err(EngineError::EmptySearchSpace);
    }
    let ids: Vec<&EntityId> = search_space.iter().collect();
    let perm = shuffle_indices(ids.len(), seed);
    let n = ids.len();
    let ordered = perm
        .iter()
        .enumerate()
        .map(|(pos, &i)| (ids[i as usize].clone(), (n - pos) as f64))
        .collect();
    Ok(RankedPrediction {
        query: None,
        ordered,
        center: Vec::new(),
    })
}
