//! Dense embedding storage: load word2vec files, look up vectors, compute
//! mean vectors and centered cosine scores, and project small selections to
//! two dimensions.

mod io;
mod pca;

pub use io::{load_embeddings, save_embeddings, EmbeddingFormat};
pub use pca::{pca_2d, Pca2d, PcaPoint};

use std::collections::HashMap;

use thiserror::Error;

use crate::numeric;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed header in {path}: {detail}")]
    MalformedHeader { path: String, detail: String },
    #[error("dimension mismatch at row {row} (token {token:?}): expected {expected} values, found {found}")]
    DimensionMismatch {
        row: usize,
        token: String,
        expected: usize,
        found: usize,
    },
    #[error("duplicate token {token:?}")]
    DuplicateToken { token: String },
    #[error("non-finite value at row {row} (token {token:?})")]
    NonFinite { row: usize, token: String },
    #[error("malformed row {row} in {path}: {detail}")]
    MalformedRow {
        path: String,
        row: usize,
        detail: String,
    },
    #[error("token {token:?} not present in the store")]
    MissingToken { token: String },
    #[error("empty token selection")]
    EmptySelection,
    #[error("vector length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("degenerate score: centered vector is zero")]
    DegenerateVector,
    #[error("projection needs at least {needed} tokens, got {got}")]
    TooFewTokens { needed: usize, got: usize },
    #[error("projection input is rank-deficient (fewer than 2 informative directions)")]
    RankDeficient,
}

/// Immutable vocabulary plus a dense row-major `|vocab| x dim` matrix.
///
/// File values are 32-bit; they are promoted to f64 once at load so that all
/// downstream accumulation runs in double precision.
#[derive(Debug, Clone)]
pub struct EmbeddingStore {
    dim: usize,
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    matrix: Vec<f64>,
}

impl EmbeddingStore {
    /// Builds a store from rows. Used by the file readers and by tests that
    /// synthesize fixtures; enforces the same invariants as loading.
    pub fn from_rows<I, S>(dim: usize, rows: I) -> Result<Self, EmbeddingError>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let mut tokens = Vec::new();
        let mut index = HashMap::new();
        let mut matrix = Vec::new();
        for (row, (token, values)) in rows.into_iter().enumerate() {
            let token = token.into();
            if values.len() != dim {
                return Err(EmbeddingError::DimensionMismatch {
                    row,
                    token,
                    expected: dim,
                    found: values.len(),
                });
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(EmbeddingError::NonFinite { row, token });
            }
            if index.contains_key(&token) {
                return Err(EmbeddingError::DuplicateToken { token });
            }
            index.insert(token.clone(), tokens.len());
            tokens.push(token);
            matrix.extend_from_slice(&values);
        }
        Ok(EmbeddingStore {
            dim,
            tokens,
            index,
            matrix,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    /// Row for `token`, or `None` when absent. Absence is a value, not an
    /// error; callers decide whether to drop or fail.
    pub fn vector_of(&self, token: &str) -> Option<&[f64]> {
        self.index.get(token).map(|&i| self.row(i))
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn row(&self, idx: usize) -> &[f64] {
        &self.matrix[idx * self.dim..(idx + 1) * self.dim]
    }

    pub fn token(&self, idx: usize) -> &str {
        &self.tokens[idx]
    }

    /// Tokens in file (row) order.
    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|s| s.as_str())
    }

    /// Componentwise arithmetic mean of the selected rows.
    ///
    /// The selection is summed as a multiset in sorted token order through a
    /// pairwise tree, so the result does not depend on the order the caller
    /// supplies tokens in. Errors on an empty selection or a missing token
    /// (naming it).
    pub fn mean_vector<'a, I>(&self, tokens: I) -> Result<Vec<f64>, EmbeddingError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut selected = Vec::new();
        for token in tokens {
            match self.index.get(token) {
                Some(&i) => selected.push((token, i)),
                None => {
                    return Err(EmbeddingError::MissingToken {
                        token: token.to_string(),
                    })
                }
            }
        }
        if selected.is_empty() {
            return Err(EmbeddingError::EmptySelection);
        }
        selected.sort();
        Ok(numeric::pairwise_mean(selected.len(), self.dim, &|i, buf| {
            buf.copy_from_slice(self.row(selected[i].1))
        }))
    }
}

/// Cosine of `a - mu` and `b - mu`.
///
/// Errors when either centered vector is exactly zero; the caller decides the
/// ranking policy for that degenerate case.
pub fn centered_cosine(a: &[f64], b: &[f64], mu: &[f64]) -> Result<f64, EmbeddingError> {
    if a.len() != b.len() {
        return Err(EmbeddingError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.len() != mu.len() {
        return Err(EmbeddingError::LengthMismatch {
            left: a.len(),
            right: mu.len(),
        });
    }
    let ca: Vec<f64> = a.iter().zip(mu.iter()).map(|(x, m)| x - m).collect();
    let cb: Vec<f64> = b.iter().zip(mu.iter()).map(|(x, m)| x - m).collect();
    let na = numeric::norm(&ca);
    let nb = numeric::norm(&cb);
    if na == 0.0 || nb == 0.0 {
        return Err(EmbeddingError::DegenerateVector);
    }
    Ok(numeric::dot(&ca, &cb) / (na * nb))
}
