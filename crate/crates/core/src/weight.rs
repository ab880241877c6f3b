//! Multiplex tie strength: the fraction of layers on which a pair is tied.

use std::sync::Arc;

use crate::graph::{GraphError, MultiplexGraph};
use crate::matrix::{MatrixKind, WeightedMatrix};

/// `mw_ij = Σ_α a^α_ij / M` for the ordered pair `(i, j)`.
pub fn multiplex_weight(m: &MultiplexGraph, i: usize, j: usize) -> Result<f64, GraphError> {
    m.roster().check(i)?;
    m.roster().check(j)?;
    if i == j {
        return Err(GraphError::SelfTie(i));
    }
    Ok(tied_layers(m, i, j) as f64 / m.layer_count() as f64)
}

fn tied_layers(m: &MultiplexGraph, i: usize, j: usize) -> usize {
    m.layers().iter().filter(|l| l.has_arc(i, j)).count()
}

/// All-pairs multiplex weights with a zero diagonal.
///
/// Directed layers contribute only along their arcs, so the matrix is
/// asymmetric when the multiplex has one-way calls or messages. Pass
/// [`MultiplexGraph::symmetrized`] for the undirected weights used by
/// distances and the correlation statistics.
pub fn weight_matrix(m: &MultiplexGraph) -> WeightedMatrix {
    let n = m.node_count();
    let layers = m.layer_count();
    let mut out = WeightedMatrix::filled(
        MatrixKind::MultiplexWeight { layers },
        Arc::clone(m.roster()),
        0.0,
    );
    for i in 0..n {
        for j in 0..n {
            if i != j {
                out.set(i, j, tied_layers(m, i, j) as f64 / layers as f64);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Layer, Roster};

    fn three_layers(p: &[(usize, usize)], c: &[(usize, usize)], s: &[(usize, usize)]) -> MultiplexGraph {
        let r = Arc::new(Roster::numbered(4));
        let prox = Layer::from_edges("proximity", false, r.clone(), p.iter().copied()).unwrap();
        let calls = Layer::from_edges("calls", true, r.clone(), c.iter().copied()).unwrap();
        let sms = Layer::from_edges("sms", true, r.clone(), s.iter().copied()).unwrap();
        MultiplexGraph::new(r, vec![prox, calls, sms]).unwrap()
    }

    #[test]
    fn worked_weights() {
        let m = three_layers(&[(0, 1), (0, 2)], &[(0, 1)], &[(0, 1)]);
        assert_eq!(multiplex_weight(&m, 0, 1).unwrap(), 1.0);
        assert!((multiplex_weight(&m, 0, 2).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(multiplex_weight(&m, 2, 3).unwrap(), 0.0);
        // calls and sms are one-way
        assert!((multiplex_weight(&m, 1, 0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn self_tie_is_an_error() {
        let m = three_layers(&[], &[], &[]);
        assert!(matches!(multiplex_weight(&m, 2, 2), Err(GraphError::SelfTie(2))));
        assert!(matches!(
            multiplex_weight(&m, 0, 9),
            Err(GraphError::NodeOutOfRange { .. })
        ));
    }

    #[test]
    fn empty_multiplex_gives_zero_matrix() {
        let w = weight_matrix(&three_layers(&[], &[], &[]));
        assert!(w.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_layer_matrix_is_adjacency() {
        let r = Arc::new(Roster::numbered(3));
        let l = Layer::from_edges("calls", true, r.clone(), [(0, 1), (2, 0)]).unwrap();
        let m = MultiplexGraph::new(r, vec![l.clone()]).unwrap();
        let w = weight_matrix(&m);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(w.value(i, j), if l.has_arc(i, j) { 1.0 } else { 0.0 });
            }
        }
    }
}
