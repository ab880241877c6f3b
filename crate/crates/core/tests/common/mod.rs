#![allow(dead_code, clippy::needless_range_loop)]

use std::sync::Arc;

use mplx_core::{Layer, MatrixKind, MultiplexGraph, Roster, WeightedMatrix};
use proptest::prelude::*;

pub const LAYER_NAMES: [&str; 4] = ["calls", "sms", "proximity", "email"];

/// A multiplex with `1..=max_layers` layers over `2..=max_n` nodes; the
/// first two layers are directed.
pub fn multiplex(max_n: usize, max_layers: usize) -> impl Strategy<Value = MultiplexGraph> {
    (2..=max_n, 1..=max_layers).prop_flat_map(|(n, m)| {
        prop::collection::vec(prop::collection::vec(prop::bool::weighted(0.3), n * n), m).prop_map(
            move |adjs| {
                let roster = Arc::new(Roster::numbered(n));
                let layers = adjs
                    .into_iter()
                    .enumerate()
                    .map(|(k, mut adj)| {
                        let directed = k < 2;
                        for i in 0..n {
                            adj[i * n + i] = false;
                            if !directed {
                                for j in 0..i {
                                    adj[i * n + j] = adj[j * n + i];
                                }
                            }
                        }
                        Layer::from_adjacency(LAYER_NAMES[k], directed, Arc::clone(&roster), adj)
                            .unwrap()
                    })
                    .collect();
                MultiplexGraph::new(roster, layers).unwrap()
            },
        )
    })
}

/// Symmetric multiplex-weight matrix with entries in `{0, 1/M, ..., 1}`.
pub fn weights(max_n: usize) -> impl Strategy<Value = WeightedMatrix> {
    (2..=max_n, 1usize..=4).prop_flat_map(|(n, m)| {
        prop::collection::vec(0..=m, n * n).prop_map(move |raw| {
            let mut rows = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in i + 1..n {
                    let w = raw[i * n + j] as f64 / m as f64;
                    rows[i][j] = w;
                    rows[j][i] = w;
                }
            }
            let mut out = WeightedMatrix::filled(
                MatrixKind::MultiplexWeight { layers: m },
                Arc::new(Roster::numbered(n)),
                0.0,
            );
            for (i, row) in rows.iter().enumerate() {
                for (j, &w) in row.iter().enumerate() {
                    out.set(i, j, w);
                }
            }
            out
        })
    })
}

/// Weight matrix and a similarity matrix over the same roster, with some
/// similarities undefined and values drawn from a small grid to force ties.
pub fn weight_similarity_pair(max_n: usize) -> impl Strategy<Value = (WeightedMatrix, WeightedMatrix)> {
    weights(max_n).prop_flat_map(|w| {
        let n = w.len();
        prop::collection::vec(prop::option::weighted(0.9, 0u8..=10), n * n).prop_map(move |raw| {
            let mut s = WeightedMatrix::filled(MatrixKind::Similarity, Arc::clone(w.roster()), f64::NAN);
            for i in 0..n {
                for j in i + 1..n {
                    if let Some(v) = raw[i * n + j] {
                        s.set(i, j, v as f64 / 10.0);
                        s.set(j, i, v as f64 / 10.0);
                    }
                }
            }
            (w.clone(), s)
        })
    })
}

/// All-pairs distances by Floyd–Warshall over lengths `c (1 − w)`, clamped to 1.
pub fn floyd_warshall(w: &WeightedMatrix, c: f64) -> Vec<Vec<f64>> {
    let n = w.len();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for i in 0..n {
        d[i][i] = 0.0;
        for j in 0..n {
            let x = w.value(i, j).max(w.value(j, i));
            if i != j && x > 0.0 {
                d[i][j] = d[i][j].min(c * (1.0 - x));
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d.into_iter()
        .map(|row| row.into_iter().map(|x| x.min(1.0)).collect())
        .collect()
}

/// Per-node coefficient written out as the textbook sum.
pub fn node_oracle(a: &WeightedMatrix, b: &WeightedMatrix, i: usize, support_only: bool) -> Option<f64> {
    let n = a.len();
    let mut num = 0.0;
    let mut sa = 0.0;
    let mut sb = 0.0;
    for j in 0..n {
        if j == i || a.value(i, j).is_nan() || b.value(i, j).is_nan() {
            continue;
        }
        if support_only && a.value(i, j) <= 0.0 {
            continue;
        }
        num += a.value(i, j) * b.value(i, j);
        sa += a.value(i, j);
        sb += b.value(i, j);
    }
    if sa > 0.0 && sb > 0.0 {
        Some(num / (sa * sb).sqrt())
    } else {
        None
    }
}

pub fn graph_oracle(a: &WeightedMatrix, b: &WeightedMatrix, support_only: bool) -> Option<f64> {
    let defined: Vec<f64> = (0..a.len())
        .filter_map(|i| node_oracle(a, b, i, support_only))
        .collect();
    (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64)
}

/// Spearman by sorting for ranks (ties share the mean position) followed by
/// the product-moment formula.
pub fn spearman_oracle(x: &[f64], y: &[f64]) -> Option<f64> {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut r = vec![0.0; v.len()];
        for (i, &a) in v.iter().enumerate() {
            let below = v.iter().filter(|&&b| b < a).count() as f64;
            let equal = v.iter().filter(|&&b| b == a).count() as f64;
            r[i] = below + (equal + 1.0) / 2.0;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    (vx > 0.0 && vy > 0.0).then(|| cov / (vx * vy).sqrt())
}
