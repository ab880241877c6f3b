//! Weighted network distance over multiplex weights.
//!
//! An edge with weight `mw > 0` has length `c · (1 − mw)`; distances are
//! shortest-path sums clamped to 1, and unreachable pairs sit at exactly 1.
//! With three layers and `c = 0.3` one-hop lengths are 0, 0.1 and 0.2.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::matrix::{MatrixKind, WeightedMatrix};

/// Distance assigned to pairs with no connecting path, and the clamp.
pub const NO_PATH: f64 = 1.0;

#[derive(Debug, Error)]
pub enum DistanceError {
    #[error("distance needs a multiplex-weight matrix, got {0}")]
    WrongKind(&'static str),
    #[error("edge-length scale must be finite and positive, got {0}")]
    BadScale(f64),
    #[error("weight {value} at ({i}, {j}) lies outside [0, 1]")]
    BadWeight { i: usize, j: usize, value: f64 },
}

/// Longest one-hop edge (a tie on a single layer).
pub const MAX_HOP_LENGTH: f64 = 0.2;

/// Scale that keeps a single-layer tie at [`MAX_HOP_LENGTH`]:
/// `c · (1 − 1/M) = 0.2`, i.e. `c = M / (5 (M − 1))`; 0.3 for three layers.
pub fn default_scale(layers: usize) -> f64 {
    if layers <= 1 {
        // every edge has mw = 1, so the scale never matters
        MAX_HOP_LENGTH
    } else {
        MAX_HOP_LENGTH * layers as f64 / (layers - 1) as f64
    }
}

/// Edge length for a symmetrized weight, or `None` when there is no edge.
pub fn edge_length(weight: f64, scale: f64) -> Option<f64> {
    (weight > 0.0).then_some(scale * (1.0 - weight))
}

/// All-pairs distances. Asymmetric inputs are symmetrized with `max(w_ij, w_ji)`.
pub fn distance_matrix(
    weights: &WeightedMatrix,
    scale: Option<f64>,
) -> Result<WeightedMatrix, DistanceError> {
    let layers = match weights.kind() {
        MatrixKind::MultiplexWeight { layers } => layers,
        other => return Err(DistanceError::WrongKind(other.label())),
    };
    let scale = scale.unwrap_or_else(|| default_scale(layers));
    if !(scale.is_finite() && scale > 0.0) {
        return Err(DistanceError::BadScale(scale));
    }
    let adjacency = adjacency_lists(weights, scale)?;
    let n = weights.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|source| dijkstra(&adjacency, source))
        .collect();
    let values = rows
        .into_iter()
        .flatten()
        .map(|d| if d.is_finite() { d.min(NO_PATH) } else { NO_PATH })
        .collect();
    Ok(WeightedMatrix::from_values(
        MatrixKind::Distance,
        Arc::clone(weights.roster()),
        values,
    ))
}

fn adjacency_lists(
    weights: &WeightedMatrix,
    scale: f64,
) -> Result<Vec<Vec<(usize, f64)>>, DistanceError> {
    let n = weights.len();
    let mut adjacency = vec![Vec::new(); n];
    for (i, out) in adjacency.iter_mut().enumerate() {
        for j in 0..n {
            if i == j {
                continue;
            }
            let value = weights.value(i, j);
            if !(0.0..=1.0).contains(&value) {
                return Err(DistanceError::BadWeight { i, j, value });
            }
            if let Some(len) = edge_length(value.max(weights.value(j, i)), scale) {
                out.push((j, len));
            }
        }
    }
    Ok(adjacency)
}

#[derive(PartialEq)]
struct Entry {
    dist: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra(adjacency: &[Vec<(usize, f64)>], source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adjacency.len()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Entry {
        dist: 0.0,
        node: source,
    });
    while let Some(Entry { dist: d, node }) = heap.pop() {
        if d > dist[node] {
            continue;
        }
        for &(next, len) in &adjacency[node] {
            let candidate = d + len;
            if candidate < dist[next] {
                dist[next] = candidate;
                heap.push(Entry {
                    dist: candidate,
                    node: next,
                });
            }
        }
    }
    dist
}
