use serde::{Deserialize, Serialize};

use super::{check_aligned, CorrelationMode, CorrelationOptions, Masking, StatsError};
use crate::matrix::WeightedMatrix;

/// Per-node coefficient comparing row `i` of `a` and row `i` of `b`.
///
/// Diagonal entries and pairs where either matrix is undefined are skipped.
/// Returns `Ok(None)` when either row sum is zero.
pub fn node_correlation(
    a: &WeightedMatrix,
    b: &WeightedMatrix,
    i: usize,
    opts: CorrelationOptions,
) -> Result<Option<f64>, StatsError> {
    check_aligned(a, b)?;
    if i >= a.len() {
        return Err(StatsError::NodeOutOfRange(i));
    }
    Ok(row_coefficient(a, b, i, None, opts))
}

/// `b` is read through `perm`: `b'[i][j] = b[perm[i]][perm[j]]`.
pub(super) fn row_coefficient(
    a: &WeightedMatrix,
    b: &WeightedMatrix,
    i: usize,
    perm: Option<&[usize]>,
    opts: CorrelationOptions,
) -> Option<f64> {
    let n = a.len();
    let map = |k: usize| perm.map_or(k, |p| p[k]);
    let a_row = a.row(i);
    let b_row = b.row(map(i));
    let (mut ab, mut sa, mut sb) = (0.0, 0.0, 0.0);
    for j in 0..n {
        if j == i {
            continue;
        }
        let x = a_row[j];
        let y = b_row[map(j)];
        if x.is_nan() || y.is_nan() {
            continue;
        }
        if opts.masking == Masking::Support && x <= 0.0 {
            continue;
        }
        ab += x * y;
        match opts.mode {
            CorrelationMode::RowSum => {
                sa += x;
                sb += y;
            }
            CorrelationMode::Cosine => {
                sa += x * x;
                sb += y * y;
            }
        }
    }
    (sa > 0.0 && sb > 0.0).then(|| ab / (sa * sb).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphCorrelation {
    /// Mean of the defined per-node coefficients.
    pub value: f64,
    pub defined_nodes: usize,
    /// Participants whose coefficient is undefined.
    pub excluded: Vec<String>,
    pub per_node: Vec<Option<f64>>,
}

/// Average of [`node_correlation`] over nodes where it is defined.
pub fn graph_correlation(
    a: &WeightedMatrix,
    b: &WeightedMatrix,
    opts: CorrelationOptions,
) -> Result<GraphCorrelation, StatsError> {
    check_aligned(a, b)?;
    let per_node: Vec<Option<f64>> = (0..a.len())
        .map(|i| row_coefficient(a, b, i, None, opts))
        .collect();
    let value = mean_defined(&per_node).ok_or(StatsError::NoDefinedNodes)?;
    let excluded = per_node
        .iter()
        .enumerate()
        .filter(|(_, c)| c.is_none())
        .map(|(i, _)| a.roster().id(i).to_string())
        .collect();
    Ok(GraphCorrelation {
        value,
        defined_nodes: per_node.iter().flatten().count(),
        excluded,
        per_node,
    })
}

/// Graph correlation with `b` relabelled; `None` when no node is defined.
pub(super) fn permuted_value(
    a: &WeightedMatrix,
    b: &WeightedMatrix,
    perm: &[usize],
    opts: CorrelationOptions,
) -> Option<f64> {
    let per_node: Vec<Option<f64>> = (0..a.len())
        .map(|i| row_coefficient(a, b, i, Some(perm), opts))
        .collect();
    mean_defined(&per_node)
}

fn mean_defined(values: &[Option<f64>]) -> Option<f64> {
    let (sum, count) = values
        .iter()
        .flatten()
        .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}
