//! Two-dimensional PCA of a token selection.
//!
//! The decomposition runs on the sample covariance of the mean-centered
//! selection only, never the full store; plotted selections are small while
//! the vocabulary can run to hundreds of thousands of rows.

use nalgebra::{DMatrix, SymmetricEigen};

use super::{EmbeddingError, EmbeddingStore};
use crate::numeric;

#[derive(Debug, Clone, PartialEq)]
pub struct PcaPoint {
    pub token: String,
    pub x: f64,
    pub y: f64,
}

/// Result of a 2-d projection: coordinates per token, explained variances in
/// descending order, and the fitted axes for projecting extra points.
#[derive(Debug, Clone)]
pub struct Pca2d {
    pub points: Vec<PcaPoint>,
    pub explained_variance: [f64; 2],
    mean: Vec<f64>,
    axes: [Vec<f64>; 2],
}

impl Pca2d {
    /// Coordinates as CSV with a `token,x,y` header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("token,x,y\n");
        for p in &self.points {
            let token = if p.token.contains(',') || p.token.contains('"') {
                format!("\"{}\"", p.token.replace('"', "\"\""))
            } else {
                p.token.clone()
            };
            out.push_str(&format!("{},{},{}\n", token, p.x, p.y));
        }
        out
    }

    /// Projects an arbitrary vector through the fitted axes.
    pub fn project(&self, v: &[f64]) -> Result<(f64, f64), EmbeddingError> {
        if v.len() != self.mean.len() {
            return Err(EmbeddingError::LengthMismatch {
                left: v.len(),
                right: self.mean.len(),
            });
        }
        let centered: Vec<f64> = v.iter().zip(self.mean.iter()).map(|(x, m)| x - m).collect();
        Ok((
            numeric::dot(&centered, &self.axes[0]),
            numeric::dot(&centered, &self.axes[1]),
        ))
    }
}

const RANK_TOLERANCE: f64 = 1e-12;

/// Projects the selected rows onto the top-2 principal axes of their sample
/// covariance. Axes are ordered by explained variance descending and signed
/// so that the first nonzero loading of each axis is positive.
pub fn pca_2d(store: &EmbeddingStore, tokens: &[String]) -> Result<Pca2d, EmbeddingError> {
    if tokens.len() < 3 {
        return Err(EmbeddingError::TooFewTokens {
            needed: 3,
            got: tokens.len(),
        });
    }
    let mut rows = Vec::with_capacity(tokens.len());
    for token in tokens {
        match store.vector_of(token) {
            Some(r) => rows.push(r),
            None => {
                return Err(EmbeddingError::MissingToken {
                    token: token.clone(),
                })
            }
        }
    }

    let n = rows.len();
    let dim = store.dim();
    let mean = numeric::pairwise_mean(n, dim, &|i, buf| buf.copy_from_slice(rows[i]));
    let centered: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| r.iter().zip(mean.iter()).map(|(x, m)| x - m).collect())
        .collect();

    // Sample covariance (1/(n-1)) X^T X of the centered selection.
    let mut cov = DMatrix::<f64>::zeros(dim, dim);
    for row in &centered {
        for i in 0..dim {
            let xi = row[i];
            if xi == 0.0 {
                continue;
            }
            for j in 0..dim {
                cov[(i, j)] += xi * row[j];
            }
        }
    }
    cov /= (n - 1) as f64;

    let eigen = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eigen.eigenvalues[b].total_cmp(&eigen.eigenvalues[a]));
    let (top1, top2) = (order[0], order[1]);
    let var1 = eigen.eigenvalues[top1];
    let var2 = eigen.eigenvalues[top2];
    if var1 <= 0.0 || var2 <= RANK_TOLERANCE * var1 {
        return Err(EmbeddingError::RankDeficient);
    }

    let mut axes = [
        eigen.eigenvectors.column(top1).iter().copied().collect::<Vec<f64>>(),
        eigen.eigenvectors.column(top2).iter().copied().collect::<Vec<f64>>(),
    ];
    for axis in axes.iter_mut() {
        if let Some(first) = axis.iter().find(|v| **v != 0.0) {
            if *first < 0.0 {
                for v in axis.iter_mut() {
                    *v = -*v;
                }
            }
        }
    }

    let points = tokens
        .iter()
        .zip(centered.iter())
        .map(|(token, row)| PcaPoint {
            token: token.clone(),
            x: numeric::dot(row, &axes[0]),
            y: numeric::dot(row, &axes[1]),
        })
        .collect();

    Ok(Pca2d {
        points,
        explained_variance: [var1, var2],
        mean,
        axes,
    })
}
