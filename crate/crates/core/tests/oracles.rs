#![allow(clippy::needless_range_loop)]

mod common;

use mplx_core::distance::{default_scale, distance_matrix, NO_PATH};
use mplx_core::stats::{
    graph_correlation, node_correlation, spearman, spearman_degree_rank, CorrelationOptions, Masking,
};
use mplx_core::MatrixKind;
use proptest::prelude::*;

const EPS: f64 = 1e-12;

fn opts(masking: Masking) -> CorrelationOptions {
    CorrelationOptions {
        masking,
        ..Default::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn distance_matches_floyd_warshall(w in common::weights(20)) {
        let MatrixKind::MultiplexWeight { layers } = w.kind() else { unreachable!() };
        let c = default_scale(layers);
        let d = distance_matrix(&w, None).unwrap();
        let oracle = common::floyd_warshall(&w, c);
        for i in 0..w.len() {
            for j in 0..w.len() {
                prop_assert!((d.value(i, j) - oracle[i][j]).abs() <= EPS, "({i},{j}) {} vs {}", d.value(i, j), oracle[i][j]);
                if oracle[i][j].is_infinite() || oracle[i][j] >= 1.0 {
                    prop_assert_eq!(d.value(i, j), NO_PATH);
                }
            }
        }
    }

    #[test]
    fn correlation_matches_double_loop((a, b) in common::weight_similarity_pair(20)) {
        for (masking, support) in [(Masking::Support, true), (Masking::None, false)] {
            for i in 0..a.len() {
                let got = node_correlation(&a, &b, i, opts(masking)).unwrap();
                let want = common::node_oracle(&a, &b, i, support);
                match (got, want) {
                    (Some(x), Some(y)) => prop_assert!((x - y).abs() <= EPS),
                    (None, None) => {}
                    other => prop_assert!(false, "node {i}: {other:?}"),
                }
            }
            match (graph_correlation(&a, &b, opts(masking)), common::graph_oracle(&a, &b, support)) {
                (Ok(g), Some(y)) => prop_assert!((g.value - y).abs() <= EPS),
                (Err(_), None) => {}
                (g, y) => prop_assert!(false, "graph: {g:?} vs {y:?}"),
            }
        }
    }

    #[test]
    fn spearman_matches_rank_then_pearson(
        pairs in prop::collection::vec((0u8..6, 0u8..6), 2..40)
    ) {
        let x: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
        let y: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
        match (spearman(&x, &y), common::spearman_oracle(&x, &y)) {
            (Some(a), Some(b)) => prop_assert!((a - b).abs() <= EPS),
            (None, None) => {}
            other => prop_assert!(false, "{other:?}"),
        }
    }

    #[test]
    fn degree_rank_matches_oracle((a, b) in common::weight_similarity_pair(20)) {
        let got = spearman_degree_rank(&a, &b, Masking::Support).unwrap();
        let n = a.len();
        let (mut da, mut db) = (Vec::new(), Vec::new());
        for i in 0..n {
            if !(0..n).any(|j| j != i && !b.value(i, j).is_nan()) {
                continue;
            }
            da.push((0..n).filter(|&j| j != i).map(|j| a.value(i, j)).sum::<f64>());
            db.push(
                (0..n)
                    .filter(|&j| j != i && a.value(i, j) > 0.0 && !b.value(i, j).is_nan())
                    .map(|j| b.value(i, j))
                    .sum::<f64>(),
            );
        }
        prop_assert_eq!(&got.degrees_a, &da);
        let want = if da.len() >= 2 { common::spearman_oracle(&da, &db) } else { None };
        match (got.rho, want) {
            (Some(x), Some(y)) => prop_assert!((x - y).abs() <= EPS),
            (None, None) => {}
            other => prop_assert!(false, "{other:?}"),
        }
    }
}

#[test]
fn single_layer_chain_is_point_four() {
    use std::sync::Arc;
    use mplx_core::{Layer, MultiplexGraph, Roster};
    use mplx_core::weight::weight_matrix;

    let roster = Arc::new(Roster::new(["i", "j", "k"]).unwrap());
    let calls = Layer::from_edges("calls", true, Arc::clone(&roster), [(0, 1), (1, 2)]).unwrap();
    let sms = Layer::empty("sms", true, Arc::clone(&roster));
    let proximity = Layer::empty("proximity", false, Arc::clone(&roster));
    let m = MultiplexGraph::new(roster, vec![calls, sms, proximity]).unwrap();
    let d = distance_matrix(&weight_matrix(&m.symmetrized()), None).unwrap();
    assert!((d.value(0, 1) - 0.2).abs() < EPS);
    assert!((d.value(0, 2) - 0.4).abs() < EPS);
    assert!((d.value(2, 0) - 0.4).abs() < EPS);
}

#[test]
fn ties_share_the_mean_rank() {
    let x = [1.0, 2.0, 2.0, 3.0];
    let y = [1.0, 2.0, 3.0, 4.0];
    let want = common::spearman_oracle(&x, &y).unwrap();
    assert!((spearman(&x, &y).unwrap() - want).abs() < EPS);
    assert!((want - 0.9486832980505138).abs() < 1e-12);
}
