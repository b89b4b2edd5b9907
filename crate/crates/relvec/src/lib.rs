//! Relation-vector estimation and analogy-based link prediction over word
//! embeddings.
//!
//! The library loads dense word2vec-style embeddings, ingests a knowledge
//! base of drug-gene relations (with optional pathway memberships and
//! first-appearance years), estimates relation vectors from entity pairs,
//! and ranks candidate entities for analogy queries of the form
//! `u_query + v ≈ u_target` under centered cosine similarity. An evaluation
//! harness materializes the supported query settings and reports top-k
//! accuracy and mean reciprocal rank.

pub mod cli;
pub mod embedding;
pub mod engine;
pub mod estimator;
pub mod eval;
pub mod kb;
pub(crate) mod numeric;
pub mod validation;

pub use embedding::{load_embeddings, save_embeddings, EmbeddingError, EmbeddingFormat, EmbeddingStore};
pub use engine::{predict_top_k, random_rank, rank, EngineError, RankedPrediction};
pub use estimator::{
    estimate_naive, estimate_paired, Direction, EstimatorError, Method, Provenance, RelationEstimate,
};
pub use eval::{
    build_queries, run_evaluation, run_random_baseline, EvalError, EvalOptions, EvalReport,
    PathwayScope, QueryInstance, QuerySet, Setting, SettingSpec,
};
pub use kb::{
    load_knowledge_base, EntityId, EntityKind, IntervalTag, KbError, KnowledgeBase, PathwayId,
    RelationPair, RelationSubset, Scope,
};
