mod common;

use std::collections::BTreeSet;

use mplx_core::weight::{multiplex_weight, weight_matrix};
use mplx_core::MultiplexGraph;
use proptest::prelude::*;

fn names(m: &MultiplexGraph) -> Vec<&str> {
    m.layers().iter().map(|l| l.name()).collect()
}

fn edges(layer: &mplx_core::Layer) -> BTreeSet<(usize, usize)> {
    layer.edge_set()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn intersection_within_each_layer_within_union(m in common::multiplex(15, 4)) {
        let all = names(&m);
        let inter = m.intersection(&all).unwrap();
        let union = m.union(&all).unwrap();
        for layer in m.layers() {
            prop_assert!(inter.is_subset_of(layer));
            prop_assert!(layer.symmetrized().is_subset_of(&union));
        }
    }

    #[test]
    fn union_and_intersection_are_idempotent_and_commutative(m in common::multiplex(15, 4)) {
        let all = names(&m);
        let first = all[0];
        let last = *all.last().unwrap();
        prop_assert_eq!(edges(&m.union(&[first, first]).unwrap()), edges(&m.layers()[0].symmetrized()));
        prop_assert_eq!(edges(&m.intersection(&[first, first]).unwrap()), edges(&m.layers()[0].symmetrized()));
        prop_assert_eq!(edges(&m.union(&[first, last]).unwrap()), edges(&m.union(&[last, first]).unwrap()));
        prop_assert_eq!(
            edges(&m.intersection(&[first, last]).unwrap()),
            edges(&m.intersection(&[last, first]).unwrap())
        );
        let u = m.union(&all).unwrap();
        prop_assert_eq!(edges(&u.union(&u, "u").unwrap()), edges(&u));
        prop_assert_eq!(edges(&u.intersection(&u, "u").unwrap()), edges(&u));
    }

    #[test]
    fn pairwise_operations_are_associative(m in common::multiplex(15, 4)) {
        let l = m.layers();
        let (a, b, c) = (&l[0], &l[l.len() / 2], &l[l.len() - 1]);
        let left = a.union(b, "").unwrap().union(c, "").unwrap();
        let right = a.union(&b.union(c, "").unwrap(), "").unwrap();
        prop_assert_eq!(edges(&left), edges(&right));
        let left = a.intersection(b, "").unwrap().intersection(c, "").unwrap();
        let right = a.intersection(&b.intersection(c, "").unwrap(), "").unwrap();
        prop_assert_eq!(edges(&left), edges(&right));
    }

    #[test]
    fn exclusive_edges_partition_the_union(m in common::multiplex(15, 4)) {
        let all = names(&m);
        let union = edges(&m.union(&all).unwrap());
        let exclusive: Vec<BTreeSet<(usize, usize)>> = all
            .iter()
            .map(|name| edges(&m.exclusive_edges(name).unwrap()))
            .collect();
        let n = m.node_count();
        let mut shared = BTreeSet::new();
        for i in 0..n {
            for j in i + 1..n {
                let k = m.layers().iter().filter(|l| l.connected(i, j)).count();
                if k >= 2 {
                    shared.insert((i, j));
                }
            }
        }
        // exclusive sets are disjoint and, with the multi-layer pairs, rebuild the union
        let mut rebuilt = shared.clone();
        for (a, set) in exclusive.iter().enumerate() {
            prop_assert!(set.is_disjoint(&shared));
            for other in &exclusive[a + 1..] {
                prop_assert!(set.is_disjoint(other));
            }
            rebuilt.extend(set.iter().copied());
        }
        prop_assert_eq!(rebuilt, union);
    }

    #[test]
    fn multiplex_weight_counts_layers(m in common::multiplex(15, 4)) {
        let sym = m.symmetrized();
        let layers = m.layer_count();
        let w = weight_matrix(&sym);
        for i in 0..m.node_count() {
            for j in 0..m.node_count() {
                if i == j {
                    prop_assert_eq!(w.value(i, j), 0.0);
                    continue;
                }
                let mw = multiplex_weight(&sym, i, j).unwrap();
                prop_assert_eq!(mw, w.value(i, j));
                let k = (mw * layers as f64).round();
                prop_assert_eq!(k / layers as f64, mw);
                let on_all = m.layers().iter().all(|l| l.connected(i, j));
                prop_assert_eq!(mw == 1.0, on_all);
                prop_assert_eq!(mw == 0.0, !m.layers().iter().any(|l| l.connected(i, j)));
            }
        }
    }

    #[test]
    fn multiplex_roundtrips_through_json(m in common::multiplex(10, 4)) {
        let back = MultiplexGraph::from_json(&m.to_json()).unwrap();
        prop_assert_eq!(back.to_json(), m.to_json());
    }
}
