//! Top-k accuracy and mean reciprocal rank over aligned ranking/answer lists.

use std::collections::BTreeSet;

use crate::engine::RankedPrediction;
use crate::kb::EntityId;

use super::EvalError;

/// Fraction of queries whose top-k prefix intersects the answer set.
pub fn top_k_accuracy(
    rankings: &[RankedPrediction],
    answers: &[BTreeSet<EntityId>],
    k: usize,
) -> Result<f64, EvalError> {
    if rankings.len() != answers.len() {
        return Err(EvalError::LengthMismatch {
            rankings: rankings.len(),
            answers: answers.len(),
        });
    }
    if rankings.is_empty() {
        return Err(EvalError::NoQueries);
    }
    let hits = rankings
        .iter()
        .zip(answers.iter())
        .filter(|(r, a)| r.ordered.iter().take(k).any(|(id, _)| a.contains(id)))
        .count();
    Ok(hits as f64 / rankings.len() as f64)
}

/// Mean over queries of the reciprocal rank of the first answer-set member,
/// ranks starting at 1. Every ranking must contain an answer member; a miss
/// means the caller violated the answer-within-search-space precondition.
pub fn mean_reciprocal_rank(
    rankings: &[RankedPrediction],
    answers: &[BTreeSet<EntityId>],
) -> Result<f64, EvalError> {
    if rankings.len() != answers.len() {
        return Err(EvalError::LengthMismatch {
            rankings: rankings.len(),
            answers: answers.len(),
        });
    }
    if rankings.is_empty() {
        return Err(EvalError::NoQueries);
    }
    let mut sum = 0.0;
    for (i, (ranking, answer)) in rankings.iter().zip(answers.iter()).enumerate() {
        match ranking.first_hit_rank(answer) {
            Some(rank) => sum += 1.0 / rank as f64,
            None => {
                return Err(EvalError::AnswerNotInRanking { query_index: i });
            }
        }
    }
    Ok(sum / rankings.len() as f64)
}
