//! Relation-vector estimators.
//!
//! The paired estimator averages the per-pair embedding differences
//! `u_gene - u_drug` over a relation subset; the naive estimator takes the
//! difference of the unconditional gene and drug mean embeddings. Reversing
//! an estimate negates it for queries in the opposite direction.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::EmbeddingStore;
use crate::kb::{EntityId, IntervalTag, RelationSubset, Scope};
use crate::numeric;

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("relation subset is empty after vocabulary intersection ({dropped} pairs dropped)")]
    EmptySubset { dropped: usize },
    #[error("{side} set is empty after vocabulary intersection ({dropped} entities dropped)")]
    EmptySide { side: &'static str, dropped: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Paired,
    Naive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "drug->gene")]
    DrugToGene,
    #[serde(rename = "gene->drug")]
    GeneToDrug,
}

impl Direction {
    pub fn flipped(self) -> Self {
        match self {
            Direction::DrugToGene => Direction::GeneToDrug,
            Direction::GeneToDrug => Direction::DrugToGene,
        }
    }
}

/// Which relation subset (or member sets) an estimate came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub scope: Scope,
    pub interval: IntervalTag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Support {
    /// Number of pairs averaged by the paired estimator.
    Pairs(usize),
    /// Sizes of the drug and gene sets averaged by the naive estimator.
    Sets { drugs: usize, genes: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationEstimate {
    pub method: Method,
    pub direction: Direction,
    pub provenance: Provenance,
    pub support: Support,
    pub vector: Vec<f64>,
}

impl RelationEstimate {
    /// Componentwise negation with the direction flipped; provenance and
    /// support are preserved. An exact involution.
    pub fn reversed(&self) -> RelationEstimate {
        RelationEstimate {
            method: self.method,
            direction: self.direction.flipped(),
            provenance: self.provenance.clone(),
            support: self.support,
            vector: self.vector.iter().map(|v| -v).collect(),
        }
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(s: &str) -> serde_json::Result<RelationEstimate> {
        serde_json::from_str(s)
    }
}

/// Mean of the per-pair differences `u_gene - u_drug` over the subset.
///
/// Pairs with an out-of-vocabulary member are dropped per pair; the dropped
/// count is returned next to the estimate. The summation runs over a pairwise
/// tree in sorted pair order, so the result does not depend on set insertion
/// order or on how callers parallelize around it.
pub fn estimate_paired(
    store: &EmbeddingStore,
    subset: &RelationSubset,
) -> Result<(RelationEstimate, usize), EstimatorError> {
    let (kept, dropped) = subset.intersect_vocabulary(store);
    if kept.is_empty() {
        return Err(EstimatorError::EmptySubset { dropped });
    }
    let rows: Vec<(&[f64], &[f64])> = kept
        .pairs()
        .iter()
        .map(|p| {
            (
                store.vector_of(p.drug.as_str()).expect("intersected"),
                store.vector_of(p.gene.as_str()).expect("intersected"),
            )
        })
        .collect();
    let vector = numeric::pairwise_mean(rows.len(), store.dim(), &|i, buf| {
        let (drug, gene) = rows[i];
        for (b, (g, d)) in buf.iter_mut().zip(gene.iter().zip(drug.iter())) {
            *b = g - d;
        }
    });
    Ok((
        RelationEstimate {
            method: Method::Paired,
            direction: Direction::DrugToGene,
            provenance: Provenance {
                scope: kept.scope().clone(),
                interval: kept.interval(),
            },
            support: Support::Pairs(rows.len()),
            vector,
        },
        dropped,
    ))
}

/// Difference of the gene and drug mean embeddings over the given member
/// sets. Entities missing from the vocabulary are dropped; the dropped counts
/// are returned as `(drugs, genes)`.
pub fn estimate_naive<'a, D, G>(
    store: &EmbeddingStore,
    drugs: D,
    genes: G,
    scope: Scope,
    interval: IntervalTag,
) -> Result<(RelationEstimate, (usize, usize)), EstimatorError>
where
    D: IntoIterator<Item = &'a EntityId>,
    G: IntoIterator<Item = &'a EntityId>,
{
    let split = |ids: Vec<&'a EntityId>| {
        let kept: Vec<&str> = ids
            .iter()
            .filter(|e| store.contains(e.as_str()))
            .map(|e| e.as_str())
            .collect();
        let dropped = ids.len() - kept.len();
        (kept, dropped)
    };
    let (drug_tokens, dropped_drugs) = split(drugs.into_iter().collect());
    let (gene_tokens, dropped_genes) = split(genes.into_iter().collect());
    if drug_tokens.is_empty() {
        return Err(EstimatorError::EmptySide {
            side: "drug",
            dropped: dropped_drugs,
        });
    }
    if gene_tokens.is_empty() {
        return Err(EstimatorError::EmptySide {
            side: "gene",
            dropped: dropped_genes,
        });
    }
    let drug_mean = store.mean_vector(drug_tokens.iter().copied()).expect("non-empty, in vocab");
    let gene_mean = store.mean_vector(gene_tokens.iter().copied()).expect("non-empty, in vocab");
    let vector = gene_mean
        .iter()
        .zip(drug_mean.iter())
        .map(|(g, d)| g - d)
        .collect();
    Ok((
        RelationEstimate {
            method: Method::Naive,
            direction: Direction::DrugToGene,
            provenance: Provenance { scope, interval },
            support: Support::Sets {
                drugs: drug_tokens.len(),
                genes: gene_tokens.len(),
            },
            vector,
        },
        (dropped_drugs, dropped_genes),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::RelationPair;
    use std::collections::BTreeSet;

    fn subset_of(pairs: &[(&str, &str)]) -> RelationSubset {
        let set: BTreeSet<RelationPair> = pairs
            .iter()
            .map(|(d, g)| RelationPair {
                drug: EntityId::drug(d),
                gene: EntityId::gene(g),
            })
            .collect();
        RelationSubset::new(set, Scope::Global, IntervalTag::Full)
    }

    fn store_of(rows: Vec<(String, Vec<f64>)>) -> EmbeddingStore {
        let dim = rows[0].1.len();
        EmbeddingStore::from_rows(dim, rows).unwrap()
    }

    #[test]
    fn single_pair_difference() {
        let store = store_of(vec![
            ("D:a".into(), vec![1.0, 2.0]),
            ("G:b".into(), vec![4.0, 6.0]),
        ]);
        let (est, dropped) = estimate_paired(&store, &subset_of(&[("a", "b")])).unwrap();
        assert_eq!(est.vector, vec![3.0, 4.0]);
        assert_eq!(est.support, Support::Pairs(1));
        assert_eq!(dropped, 0);
    }

    #[test]
    fn two_pair_mean() {
        let store = store_of(vec![
            ("D:a".into(), vec![0.0, 0.0]),
            ("G:x".into(), vec![1.0, 0.0]),
            ("D:b".into(), vec![0.0, 0.0]),
            ("G:y".into(), vec![0.0, 1.0]),
        ]);
        let (est, _) = estimate_paired(&store, &subset_of(&[("a", "x"), ("b", "y")])).unwrap();
        assert_eq!(est.vector, vec![0.5, 0.5]);
    }

    #[test]
    fn oov_pairs_dropped_and_all_dropped_is_error() {
        let store = store_of(vec![
            ("D:a".into(), vec![0.0]),
            ("G:x".into(), vec![1.0]),
        ]);
        let (est, dropped) =
            estimate_paired(&store, &subset_of(&[("a", "x"), ("a", "missing")])).unwrap();
        assert_eq!(dropped, 1);
        assert_eq!(est.support, Support::Pairs(1));
        let err = estimate_paired(&store, &subset_of(&[("q", "z")])).unwrap_err();
        assert!(matches!(err, EstimatorError::EmptySubset { dropped: 1 }));
    }

    #[test]
    fn naive_singletons_and_equal_sets() {
        let store = store_of(vec![
            ("D:a".into(), vec![0.0, 0.0]),
            ("G:b".into(), vec![1.0, 1.0]),
        ]);
        let drugs = [EntityId::drug("a")];
        let genes = [EntityId::gene("b")];
        let (est, _) = estimate_naive(
            &store,
            drugs.iter(),
            genes.iter(),
            Scope::Global,
            IntervalTag::Full,
        )
        .unwrap();
        assert_eq!(est.vector, vec![1.0, 1.0]);

        // Same vectors on both sides cancel exactly.
        let store = store_of(vec![
            ("D:a".into(), vec![0.25, -0.5]),
            ("G:b".into(), vec![0.25, -0.5]),
        ]);
        let (est, _) = estimate_naive(
            &store,
            drugs.iter(),
            genes.iter(),
            Scope::Global,
            IntervalTag::Full,
        )
        .unwrap();
        assert_eq!(est.vector, vec![0.0, 0.0]);
    }

    #[test]
    fn naive_equals_paired_on_complete_bipartite() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(5);
        let dim = 6;
        let mut rows = Vec::new();
        let drugs: Vec<EntityId> = (0..5).map(|i| EntityId::drug(&format!("d{i}"))).collect();
        let genes: Vec<EntityId> = (0..4).map(|i| EntityId::gene(&format!("g{i}"))).collect();
        for id in drugs.iter().chain(genes.iter()) {
            let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            rows.push((id.as_str().to_string(), v));
        }
        let store = store_of(rows);
        let mut pairs = BTreeSet::new();
        for d in &drugs {
            for g in &genes {
                pairs.insert(RelationPair {
                    drug: d.clone(),
                    gene: g.clone(),
                });
            }
        }
        let complete = RelationSubset::new(pairs, Scope::Global, IntervalTag::Full);
        let (paired, _) = estimate_paired(&store, &complete).unwrap();
        let (naive, _) = estimate_naive(
            &store,
            drugs.iter(),
            genes.iter(),
            Scope::Global,
            IntervalTag::Full,
        )
        .unwrap();
        for (p, n) in paired.vector.iter().zip(naive.vector.iter()) {
            assert!((p - n).abs() <= 1e-12 * p.abs().max(1.0));
        }
    }

    #[test]
    fn reverse_negates_and_is_involutive() {
        let store = store_of(vec![
            ("D:a".into(), vec![1.0, 2.0]),
            ("G:b".into(), vec![4.0, 6.0]),
        ]);
        let (est, _) = estimate_paired(&store, &subset_of(&[("a", "b")])).unwrap();
        let rev = est.reversed();
        assert_eq!(rev.vector, vec![-3.0, -4.0]);
        assert_eq!(rev.direction, Direction::GeneToDrug);
        assert_eq!(rev.provenance, est.provenance);
        assert_eq!(rev.reversed(), est);
    }

    #[test]
    fn reverse_matches_swapped_role_mean() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(9);
        let dim = 8;
        let mut rows = Vec::new();
        let mut pair_list = Vec::new();
        for i in 0..20 {
            let d: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let g: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            rows.push((format!("D:d{i}"), d));
            rows.push((format!("G:g{i}"), g));
            pair_list.push((format!("d{i}"), format!("g{i}")));
        }
        let store = store_of(rows.clone());
        let refs: Vec<(&str, &str)> = pair_list.iter().map(|(d, g)| (d.as_str(), g.as_str())).collect();
        let (est, _) = estimate_paired(&store, &subset_of(&refs)).unwrap();
        let rev = est.reversed();
        // Swapped-role mean of u_drug - u_gene, accumulated independently.
        let mut want = vec![0.0; dim];
        for (d, g) in &pair_list {
            let ud = store.vector_of(&format!("D:{d}")).unwrap();
            let ug = store.vector_of(&format!("G:{g}")).unwrap();
            for k in 0..dim {
                want[k] += ud[k] - ug[k];
            }
        }
        for w in want.iter_mut() {
            *w /= pair_list.len() as f64;
        }
        for (r, w) in rev.vector.iter().zip(want.iter()) {
            assert!((r - w).abs() <= 1e-12 * w.abs().max(1.0));
        }
    }

    #[test]
    fn permutation_of_input_order_is_bit_identical() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(3);
        let dim = 5;
        let mut rows = Vec::new();
        let mut pair_list = Vec::new();
        for i in 0..33 {
            let d: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let g: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            rows.push((format!("D:d{i}"), d));
            rows.push((format!("G:g{i}"), g));
            pair_list.push((format!("d{i}"), format!("g{i}")));
        }
        let store = store_of(rows);
        let refs: Vec<(&str, &str)> = pair_list.iter().map(|(d, g)| (d.as_str(), g.as_str())).collect();
        let (a, _) = estimate_paired(&store, &subset_of(&refs)).unwrap();
        let mut shuffled = refs.clone();
        shuffled.reverse();
        let (b, _) = estimate_paired(&store, &subset_of(&shuffled)).unwrap();
        assert_eq!(a.vector, b.vector);
    }

    #[test]
    fn json_round_trip() {
        let est = RelationEstimate {
            method: Method::Paired,
            direction: Direction::DrugToGene,
            provenance: Provenance {
                scope: Scope::Pathway {
                    pathway: crate::kb::PathwayId("p1".into()),
                },
                interval: IntervalTag::Lower,
            },
            support: Support::Pairs(7),
            vector: vec![0.5, -1.25, 3.0],
        };
        let json = est.to_json().unwrap();
        let back = RelationEstimate::from_json(&json).unwrap();
        assert_eq!(back, est);
        assert!(json.contains("\"method\""));
        assert!(json.contains("\"drug->gene\""));
    }
}
