//! Deterministic accumulation helpers shared by the estimator and the
//! embedding store.

/// Leaf size below which summation falls back to a plain sequential loop.
const PAIRWISE_LEAF: usize = 8;

/// Pairwise (tree) summation of `n` vectors of length `dim`.
///
/// `fill(i, buf)` must overwrite `buf` with the `i`-th vector. The reduction
/// tree depends only on `n`, so the result is bit-identical for a fixed input
/// order regardless of how the caller schedules surrounding work.
pub fn pairwise_sum<F>(n: usize, dim: usize, fill: &F) -> Vec<f64>
where
    F: Fn(usize, &mut [f64]),
{
    assert!(n > 0, "pairwise_sum requires at least one vector");
    sum_range(0, n, dim, fill)
}

fn sum_range<F>(start: usize, len: usize, dim: usize, fill: &F) -> Vec<f64>
where
    F: Fn(usize, &mut [f64]),
{
    if len <= PAIRWISE_LEAF {
        let mut acc = vec![0.0; dim];
        let mut row = vec![0.0; dim];
        fill(start, &mut acc);
        for i in start + 1..start + len {
            fill(i, &mut row);
            for (a, r) in acc.iter_mut().zip(row.iter()) {
                *a += *r;
            }
        }
        acc
    } else {
        let half = len / 2;
        let mut left = sum_range(start, half, dim, fill);
        let right = sum_range(start + half, len - half, dim, fill);
        for (l, r) in left.iter_mut().zip(right.iter()) {
            *l += *r;
        }
        left
    }
}

/// Pairwise mean of `n` vectors.
pub fn pairwise_mean<F>(n: usize, dim: usize, fill: &F) -> Vec<f64>
where
    F: Fn(usize, &mut [f64]),
{
    let mut sum = pairwise_sum(n, dim, fill);
    let inv = 1.0 / n as f64;
    for x in sum.iter_mut() {
        *x *= inv;
    }
    sum
}

/// Sequential dot product. The component order is part of the scoring
/// contract: rankings are checked bit-for-bit against independently computed
/// cosines, so this must stay a plain left-to-right loop.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        acc += x * y;
    }
    acc
}

/// Euclidean norm via the same sequential accumulation as [`dot`].
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(data: &[Vec<f64>]) -> impl Fn(usize, &mut [f64]) + '_ {
        move |i, buf| buf.copy_from_slice(&data[i])
    }

    #[test]
    fn sum_matches_sequential_small() {
        let data: Vec<Vec<f64>> = (0..37).map(|i| vec![i as f64, -(i as f64) * 0.5]).collect();
        let got = pairwise_sum(data.len(), 2, &rows(&data));
        let mut want = [0.0; 2];
        for r in &data {
            want[0] += r[0];
            want[1] += r[1];
        }
        assert!((got[0] - want[0]).abs() < 1e-9);
        assert!((got[1] - want[1]).abs() < 1e-9);
    }

    #[test]
    fn mean_of_identical_dyadic_rows_is_exact() {
        let data: Vec<Vec<f64>> = (0..64).map(|_| vec![0.5, -0.25, 3.0]).collect();
        let got = pairwise_mean(data.len(), 3, &rows(&data));
        assert_eq!(got, vec![0.5, -0.25, 3.0]);
    }

    #[test]
    fn dot_is_sequential() {
        let a = [1.0, 2.0, 3.0];
        let b = [4.0, 5.0, 6.0];
        assert_eq!(dot(&a, &b), ((1.0f64 * 4.0) + 2.0 * 5.0) + 3.0 * 6.0);
    }
}
