use serde::{Deserialize, Serialize};

use super::{check_aligned, Masking, StatsError};
use crate::matrix::WeightedMatrix;

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&p, &q| x[p].total_cmp(&x[q]));
    let mut ranks = vec![0.0; x.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && x[order[end]] == x[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let rank = (start + end + 1) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = rank;
        }
        start = end;
    }
    ranks
}

/// Product-moment correlation; `None` if either input is constant.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    (sxx > 0.0 && syy > 0.0).then(|| (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    pearson(&average_ranks(x), &average_ranks(y))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeRank {
    /// `None` when either degree vector is constant.
    pub rho: Option<f64>,
    /// Participants (ids) entering the correlation.
    pub nodes: Vec<String>,
    pub degrees_a: Vec<f64>,
    pub degrees_b: Vec<f64>,
}

/// Spearman correlation between weighted degrees in `a` and `b`.
///
/// `a` is symmetrized with `max(a_ij, a_ji)` before taking row sums. Only
/// nodes with at least one defined off-diagonal entry in `b` take part;
/// under [`Masking::Support`] `b` is summed over `a`'s neighbours only.
pub fn spearman_degree_rank(
    a: &WeightedMatrix,
    b: &WeightedMatrix,
    masking: Masking,
) -> Result<DegreeRank, StatsError> {
    check_aligned(a, b)?;
    let n = a.len();
    let mut nodes = Vec::new();
    let mut degrees_a = Vec::new();
    let mut degrees_b = Vec::new();
    for i in 0..n {
        if !(0..n).any(|j| j != i && b.is_defined(i, j)) {
            continue;
        }
        let (mut da, mut db) = (0.0, 0.0);
        for j in (0..n).filter(|&j| j != i) {
            let w = sym(a, i, j);
            da += w;
            let s = b.value(i, j);
            if s.is_nan() || (masking == Masking::Support && w <= 0.0) {
                continue;
            }
            db += s;
        }
        nodes.push(a.roster().id(i).to_string());
        degrees_a.push(da);
        degrees_b.push(db);
    }
    let rho = (nodes.len() >= 2)
        .then(|| spearman(&degrees_a, &degrees_b))
        .flatten();
    Ok(DegreeRank {
        rho,
        nodes,
        degrees_a,
        degrees_b,
    })
}

fn sym(m: &WeightedMatrix, i: usize, j: usize) -> f64 {
    let (x, y) = (m.value(i, j), m.value(j, i));
    match (x.is_nan(), y.is_nan()) {
        (false, false) => x.max(y),
        (false, true) => x,
        (true, false) => y,
        (true, true) => 0.0,
    }
}
