use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::correlation::{graph_correlation, permuted_value};
use super::{CorrelationOptions, StatsError};
use crate::matrix::WeightedMatrix;
use crate::rng::{stream_rng, streams};

pub const MIN_PERMUTATIONS: usize = 100;

/// Slack when comparing a permuted coefficient with the observed one, so
/// permutations that only reorder floating-point sums still count as ties.
const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Significance {
    pub observed: f64,
    pub p_value: f64,
    pub permutations: usize,
    pub seed: u64,
    /// Permutations with a coefficient at least the observed one.
    pub at_least_observed: usize,
    /// Permutations that left no node defined.
    pub undefined_permutations: usize,
    pub null_mean: f64,
    pub null_sd: f64,
}

/// Node-label permutation test of [`graph_correlation`].
///
/// Each permutation shuffles the rows and columns of `b` jointly with its
/// own seeded stream, so the result does not depend on thread count.
/// `p` is the fraction of permutations reaching the observed value.
pub fn significance(
    a: &WeightedMatrix,
    b: &WeightedMatrix,
    n_perm: usize,
    seed: u64,
    opts: CorrelationOptions,
) -> Result<Significance, StatsError> {
    if n_perm < MIN_PERMUTATIONS {
        return Err(StatsError::TooFewPermutations(n_perm));
    }
    let observed = graph_correlation(a, b, opts)?.value;
    let n = a.len();
    let null: Vec<Option<f64>> = (0..n_perm as u64)
        .into_par_iter()
        .map(|k| {
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut stream_rng(seed, streams::PERMUTATIONS + k));
            permuted_value(a, b, &perm, opts)
        })
        .collect();

    let defined: Vec<f64> = null.iter().flatten().copied().collect();
    let at_least_observed = defined
        .iter()
        .filter(|&&c| c >= observed - TIE_TOLERANCE)
        .count();
    let null_mean = defined.iter().sum::<f64>() / defined.len().max(1) as f64;
    let null_sd = if defined.len() > 1 {
        let ss: f64 = defined.iter().map(|c| (c - null_mean).powi(2)).sum();
        (ss / (defined.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(Significance {
        observed,
        p_value: at_least_observed as f64 / n_perm as f64,
        permutations: n_perm,
        seed,
        at_least_observed,
        undefined_permutations: n_perm - defined.len(),
        null_mean,
        null_sd,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::MatrixKind;

    #[test]
    fn rejects_small_permutation_counts() {
        let a = WeightedMatrix::from_rows(MatrixKind::Similarity, &[vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert!(matches!(
            significance(&a, &a, 99, 1, CorrelationOptions::default()),
            Err(StatsError::TooFewPermutations(99))
        ));
    }

    #[test]
    fn constant_b_is_permutation_invariant() {
        let n = 8;
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if (i + j) % 3 == 0 && i != j { 1.0 } else { 0.0 }).collect())
            .collect();
        let a = WeightedMatrix::from_rows(MatrixKind::Similarity, &rows);
        let mut b = WeightedMatrix::from_rows(MatrixKind::Similarity, &vec![vec![0.4; n]; n]);
        for i in 0..n {
            b.set(i, i, f64::NAN);
        }
        let s = significance(&a, &b, 200, 3, CorrelationOptions::default()).unwrap();
        assert_eq!(s.p_value, 1.0);
    }
}
