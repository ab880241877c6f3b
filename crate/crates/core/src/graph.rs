//! Multiplex graphs: binary layers over a shared participant roster, and the
//! union / intersection / exclusive-edge aggregations built from them.
//!
//! Aggregations always work on undirected edges. A directed layer takes part
//! through its symmetrized form, where `{i, j}` is an edge if either arc is
//! present.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Version written into serialized multiplex documents.
pub const DOCUMENT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("a multiplex needs at least one layer")]
    NoLayers,
    #[error("duplicate layer name `{0}`")]
    DuplicateLayer(String),
    #[error("unknown layer `{0}`")]
    UnknownLayer(String),
    #[error("layer selection is empty")]
    EmptySelection,
    #[error("layer `{0}` does not share the multiplex node ordering")]
    RosterMismatch(String),
    #[error("self-tie on node {0} is undefined")]
    SelfTie(usize),
    #[error("node index {index} out of range for {len} nodes")]
    NodeOutOfRange { index: usize, len: usize },
    #[error("duplicate participant id `{0}`")]
    DuplicateParticipant(String),
    #[error("undirected layer `{0}` has an asymmetric adjacency")]
    Asymmetric(String),
    #[error("matrix document is not square: {0}")]
    NotSquare(String),
    #[error("unsupported multiplex document version {0}")]
    UnsupportedVersion(u32),
    #[error("malformed multiplex document: {0}")]
    Json(#[from] serde_json::Error),
}

/// Ordered participant IDs shared by every layer of a multiplex.
#[derive(Clone, PartialEq, Eq)]
pub struct Roster {
    ids: Vec<String>,
    index: HashMap<String, usize>,
}

impl Roster {
    pub fn new<I, S>(ids: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let ids: Vec<String> = ids.into_iter().map(Into::into).collect();
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(GraphError::DuplicateParticipant(id.clone()));
            }
        }
        Ok(Roster { ids, index })
    }

    /// Roster with IDs `"0"`, `"1"`, ... used by generators and tests.
    pub fn numbered(n: usize) -> Self {
        Roster::new((0..n).map(|i| i.to_string())).expect("numbered ids are unique")
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, index: usize) -> &str {
        &self.ids[index]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub(crate) fn check(&self, index: usize) -> Result<(), GraphError> {
        if index < self.len() {
            Ok(())
        } else {
            Err(GraphError::NodeOutOfRange {
                index,
                len: self.len(),
            })
        }
    }
}

impl fmt::Debug for Roster {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.ids).finish()
    }
}

/// Row-major binary adjacency for one interaction channel.
#[derive(Clone)]
pub struct Layer {
    name: String,
    directed: bool,
    roster: Arc<Roster>,
    adjacency: Vec<bool>,
}

impl Layer {
    pub fn empty(name: impl Into<String>, directed: bool, roster: Arc<Roster>) -> Self {
        let n = roster.len();
        Layer {
            name: name.into(),
            directed,
            roster,
            adjacency: vec![false; n * n],
        }
    }

    /// Builds a layer from index pairs. For undirected layers each pair sets
    /// both `a_ij` and `a_ji`.
    pub fn from_edges<I>(
        name: impl Into<String>,
        directed: bool,
        roster: Arc<Roster>,
        edges: I,
    ) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut layer = Layer::empty(name, directed, roster);
        for (i, j) in edges {
            layer.insert(i, j)?;
        }
        Ok(layer)
    }

    /// Builds a layer from a dense adjacency, validating the invariants.
    pub fn from_adjacency(
        name: impl Into<String>,
        directed: bool,
        roster: Arc<Roster>,
        adjacency: Vec<bool>,
    ) -> Result<Self, GraphError> {
        let name = name.into();
        let n = roster.len();
        assert_eq!(adjacency.len(), n * n, "adjacency must be n*n");
        for i in 0..n {
            if adjacency[i * n + i] {
                return Err(GraphError::SelfTie(i));
            }
            if !directed {
                for j in (i + 1)..n {
                    if adjacency[i * n + j] != adjacency[j * n + i] {
                        return Err(GraphError::Asymmetric(name));
                    }
                }
            }
        }
        Ok(Layer {
            name,
            directed,
            roster,
            adjacency,
        })
    }

    pub fn insert(&mut self, i: usize, j: usize) -> Result<(), GraphError> {
        self.roster.check(i)?;
        self.roster.check(j)?;
        if i == j {
            return Err(GraphError::SelfTie(i));
        }
        let n = self.node_count();
        self.adjacency[i * n + j] = true;
        if !self.directed {
            self.adjacency[j * n + i] = true;
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn directed(&self) -> bool {
        self.directed
    }

    pub fn roster(&self) -> &Arc<Roster> {
        &self.roster
    }

    pub fn node_count(&self) -> usize {
        self.roster.len()
    }

    /// `a_ij` as stored, respecting direction.
    pub fn has_arc(&self, i: usize, j: usize) -> bool {
        self.adjacency[i * self.node_count() + j]
    }

    /// True when `i` and `j` are tied in either direction.
    pub fn connected(&self, i: usize, j: usize) -> bool {
        self.has_arc(i, j) || self.has_arc(j, i)
    }

    /// Arcs in lexicographic order; undirected layers list each edge once
    /// with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.node_count();
        let mut out = Vec::new();
        for i in 0..n {
            let start = if self.directed { 0 } else { i + 1 };
            for j in start..n {
                if self.adjacency[i * n + j] {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Undirected edge set `{(i, j) : i < j}` of the symmetrized layer.
    pub fn edge_set(&self) -> BTreeSet<(usize, usize)> {
        let n = self.node_count();
        let mut out = BTreeSet::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if self.connected(i, j) {
                    out.insert((i, j));
                }
            }
        }
        out
    }

    /// Number of nonzero adjacency entries. An undirected edge counts twice.
    pub fn arc_count(&self) -> usize {
        self.adjacency.iter().filter(|&&a| a).count()
    }

    pub fn undirected_edge_count(&self) -> usize {
        self.edge_set().len()
    }

    pub fn is_empty(&self) -> bool {
        !self.adjacency.iter().any(|&a| a)
    }

    /// Nodes with at least one incident arc.
    pub fn non_isolated_count(&self) -> usize {
        (0..self.node_count())
            .filter(|&i| (0..self.node_count()).any(|j| self.connected(i, j)))
            .count()
    }

    pub fn degree(&self, i: usize) -> usize {
        (0..self.node_count()).filter(|&j| self.connected(i, j)).count()
    }

    pub fn out_degree(&self, i: usize) -> usize {
        (0..self.node_count()).filter(|&j| self.has_arc(i, j)).count()
    }

    pub fn in_degree(&self, i: usize) -> usize {
        (0..self.node_count()).filter(|&j| self.has_arc(j, i)).count()
    }

    /// Undirected copy with `{i, j}` present iff either arc is present.
    pub fn symmetrized(&self) -> Layer {
        let n = self.node_count();
        let mut adjacency = vec![false; n * n];
        for i in 0..n {
            for j in 0..n {
                adjacency[i * n + j] = self.connected(i, j);
            }
        }
        Layer {
            name: self.name.clone(),
            directed: false,
            roster: Arc::clone(&self.roster),
            adjacency,
        }
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Layer {
        self.name = name.into();
        self
    }

    pub fn union(&self, other: &Layer, name: impl Into<String>) -> Result<Layer, GraphError> {
        self.combine(other, name, |a, b| a || b)
    }

    pub fn intersection(&self, other: &Layer, name: impl Into<String>) -> Result<Layer, GraphError> {
        self.combine(other, name, |a, b| a && b)
    }

    /// Edges of `self` that are absent from `other`.
    pub fn difference(&self, other: &Layer, name: impl Into<String>) -> Result<Layer, GraphError> {
        self.combine(other, name, |a, b| a && !b)
    }

    /// Whether every (symmetrized) edge of `self` is an edge of `other`.
    pub fn is_subset_of(&self, other: &Layer) -> bool {
        self.edge_set().is_subset(&other.edge_set())
    }

    fn combine(
        &self,
        other: &Layer,
        name: impl Into<String>,
        op: impl Fn(bool, bool) -> bool,
    ) -> Result<Layer, GraphError> {
        if self.roster != other.roster {
            return Err(GraphError::RosterMismatch(other.name.clone()));
        }
        let n = self.node_count();
        let mut adjacency = vec![false; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let e = op(self.connected(i, j), other.connected(i, j));
                adjacency[i * n + j] = e;
                adjacency[j * n + i] = e;
            }
        }
        Ok(Layer {
            name: name.into(),
            directed: false,
            roster: Arc::clone(&self.roster),
            adjacency,
        })
    }

    /// Degree table row: non-isolated nodes, arc count, and arcs per node.
    pub fn stats(&self) -> LayerStats {
        let nodes = self.non_isolated_count();
        let edges = self.arc_count();
        LayerStats {
            layer: self.name.clone(),
            directed: self.directed,
            nodes,
            edges,
            avg_degree: if nodes == 0 {
                0.0
            } else {
                edges as f64 / nodes as f64
            },
        }
    }
}

impl fmt::Debug for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Layer")
            .field("name", &self.name)
            .field("directed", &self.directed)
            .field("edges", &self.edges())
            .finish()
    }
}

impl PartialEq for Layer {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.directed == other.directed
            && self.roster == other.roster
            && self.adjacency == other.adjacency
    }
}

/// Summary of a single layer, matching the network specification table.
///
/// `edges` counts nonzero adjacency entries, so an undirected tie counts in
/// both directions and `avg_degree = edges / nodes` for either layer type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerStats {
    pub layer: String,
    pub directed: bool,
    pub nodes: usize,
    pub edges: usize,
    pub avg_degree: f64,
}

/// An ensemble of layers over one roster.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplexGraph {
    roster: Arc<Roster>,
    layers: Vec<Layer>,
}

impl MultiplexGraph {
    pub fn new(roster: Arc<Roster>, layers: Vec<Layer>) -> Result<Self, GraphError> {
        if layers.is_empty() {
            return Err(GraphError::NoLayers);
        }
        let mut names = BTreeSet::new();
        for layer in &layers {
            if !names.insert(layer.name.as_str()) {
                return Err(GraphError::DuplicateLayer(layer.name.clone()));
            }
            if *layer.roster != *roster {
                return Err(GraphError::RosterMismatch(layer.name.clone()));
            }
        }
        Ok(MultiplexGraph { roster, layers })
    }

    pub fn roster(&self) -> &Arc<Roster> {
        &self.roster
    }

    pub fn node_count(&self) -> usize {
        self.roster.len()
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn layer(&self, name: &str) -> Result<&Layer, GraphError> {
        self.layers
            .iter()
            .find(|l| l.name == name)
            .ok_or_else(|| GraphError::UnknownLayer(name.to_string()))
    }

    /// Same layers, each replaced by its symmetrized form.
    pub fn symmetrized(&self) -> MultiplexGraph {
        MultiplexGraph {
            roster: Arc::clone(&self.roster),
            layers: self.layers.iter().map(Layer::symmetrized).collect(),
        }
    }

    /// Resolves a layer selection to layers in multiplex order, dropping
    /// duplicates so the result does not depend on how the caller ordered it.
    fn select(&self, subset: &[&str]) -> Result<Vec<&Layer>, GraphError> {
        if subset.is_empty() {
            return Err(GraphError::EmptySelection);
        }
        for name in subset {
            self.layer(name)?;
        }
        Ok(self
            .layers
            .iter()
            .filter(|l| subset.contains(&l.name.as_str()))
            .collect())
    }

    /// Edge present in at least one selected layer.
    pub fn union(&self, subset: &[&str]) -> Result<Layer, GraphError> {
        self.aggregate("union", subset, |a, b| a || b)
    }

    /// Edge present in every selected layer.
    pub fn intersection(&self, subset: &[&str]) -> Result<Layer, GraphError> {
        self.aggregate("intersection", subset, |a, b| a && b)
    }

    fn aggregate(
        &self,
        kind: &str,
        subset: &[&str],
        op: impl Fn(bool, bool) -> bool,
    ) -> Result<Layer, GraphError> {
        let selected = self.select(subset)?;
        let label = selected
            .iter()
            .map(|l| l.name.as_str())
            .collect::<Vec<_>>()
            .join(",");
        let mut acc = selected[0].symmetrized();
        for layer in &selected[1..] {
            acc = acc.combine(layer, "", &op)?;
        }
        Ok(acc.renamed(format!("{kind}({label})")))
    }

    /// Edges of `name` that appear in no other layer.
    pub fn exclusive_edges(&self, name: &str) -> Result<Layer, GraphError> {
        let layer = self.layer(name)?;
        let mut acc = layer.symmetrized();
        for other in self.layers.iter().filter(|l| l.name != name) {
            acc = acc.difference(other, "")?;
        }
        Ok(acc.renamed(format!("exclusive({name})")))
    }

    pub fn to_document(&self) -> MultiplexDocument {
        MultiplexDocument {
            version: DOCUMENT_VERSION,
            node_ids: self.roster.ids().to_vec(),
            layers: self
                .layers
                .iter()
                .map(|l| LayerDocument {
                    name: l.name.clone(),
                    directed: l.directed,
                    edges: l.edges().into_iter().map(|(i, j)| [i, j]).collect(),
                })
                .collect(),
        }
    }

    pub fn from_document(doc: MultiplexDocument) -> Result<Self, GraphError> {
        if doc.version != DOCUMENT_VERSION {
            return Err(GraphError::UnsupportedVersion(doc.version));
        }
        let roster = Arc::new(Roster::new(doc.node_ids)?);
        let layers = doc
            .layers
            .into_iter()
            .map(|l| {
                Layer::from_edges(
                    l.name,
                    l.directed,
                    Arc::clone(&roster),
                    l.edges.into_iter().map(|[i, j]| (i, j)),
                )
            })
            .collect::<Result<Vec<_>, _>>()?;
        MultiplexGraph::new(roster, layers)
    }

    /// Pretty JSON with lexicographically sorted edge lists.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("document serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        MultiplexGraph::from_document(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplexDocument {
    pub version: u32,
    pub node_ids: Vec<String>,
    pub layers: Vec<LayerDocument>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerDocument {
    pub name: String,
    pub directed: bool,
    pub edges: Vec<[usize; 2]>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn roster(n: usize) -> Arc<Roster> {
        Arc::new(Roster::numbered(n))
    }

    fn two_layer(a: &[(usize, usize)], b: &[(usize, usize)]) -> MultiplexGraph {
        let r = roster(4);
        let la = Layer::from_edges("a", false, r.clone(), a.iter().copied()).unwrap();
        let lb = Layer::from_edges("b", false, r.clone(), b.iter().copied()).unwrap();
        MultiplexGraph::new(r, vec![la, lb]).unwrap()
    }

    #[test]
    fn union_of_disjoint_layers() {
        let m = two_layer(&[(1, 2)], &[(2, 3)]);
        let u = m.union(&["a", "b"]).unwrap();
        assert_eq!(u.edges(), vec![(1, 2), (2, 3)]);
        assert!(!u.directed());
    }

    #[test]
    fn intersection_keeps_shared_edges() {
        let m = two_layer(&[(1, 2), (2, 3)], &[(2, 3)]);
        assert_eq!(m.intersection(&["a", "b"]).unwrap().edges(), vec![(2, 3)]);
    }

    #[test]
    fn exclusive_is_set_difference() {
        let m = two_layer(&[(1, 2), (2, 3)], &[(2, 3)]);
        assert_eq!(m.exclusive_edges("a").unwrap().edges(), vec![(1, 2)]);
    }

    #[test]
    fn single_layer_union_is_symmetrized_layer() {
        let r = roster(3);
        let calls = Layer::from_edges("calls", true, r.clone(), [(0, 1), (2, 1)]).unwrap();
        let m = MultiplexGraph::new(r, vec![calls.clone()]).unwrap();
        let u = m.union(&["calls", "calls"]).unwrap();
        assert_eq!(u.edges(), vec![(0, 1), (1, 2)]);
        assert_eq!(u.edge_set(), calls.symmetrized().edge_set());
    }

    #[test]
    fn selection_errors() {
        let m = two_layer(&[], &[]);
        assert!(matches!(m.union(&[]), Err(GraphError::EmptySelection)));
        match m.intersection(&["a", "sms"]) {
            Err(GraphError::UnknownLayer(name)) => assert_eq!(name, "sms"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            m.exclusive_edges("zzz"),
            Err(GraphError::UnknownLayer(_))
        ));
    }

    #[test]
    fn layer_rejects_self_ties_and_out_of_range() {
        let r = roster(3);
        assert!(matches!(
            Layer::from_edges("x", false, r.clone(), [(1, 1)]),
            Err(GraphError::SelfTie(1))
        ));
        assert!(matches!(
            Layer::from_edges("x", true, r, [(0, 7)]),
            Err(GraphError::NodeOutOfRange { index: 7, .. })
        ));
    }

    #[test]
    fn multiplex_rejects_duplicate_names_and_foreign_rosters() {
        let r = roster(3);
        let l = Layer::empty("x", false, r.clone());
        assert!(matches!(
            MultiplexGraph::new(r.clone(), vec![l.clone(), l.clone()]),
            Err(GraphError::DuplicateLayer(_))
        ));
        let foreign = Layer::empty("y", false, roster(4));
        assert!(matches!(
            MultiplexGraph::new(r.clone(), vec![foreign]),
            Err(GraphError::RosterMismatch(_))
        ));
        assert!(matches!(
            MultiplexGraph::new(r, vec![]),
            Err(GraphError::NoLayers)
        ));
    }

    #[test]
    fn stats_count_adjacency_entries() {
        let r = roster(4);
        let prox = Layer::from_edges("proximity", false, r.clone(), [(0, 1), (1, 2)]).unwrap();
        let s = prox.stats();
        assert_eq!((s.nodes, s.edges), (3, 4));
        assert!((s.avg_degree - 4.0 / 3.0).abs() < 1e-12);
        let calls = Layer::from_edges("calls", true, r, [(0, 1), (1, 0), (3, 1)]).unwrap();
        let s = calls.stats();
        assert_eq!((s.nodes, s.edges), (3, 3));
    }

    #[test]
    fn json_document_is_sorted() {
        let r = Arc::new(Roster::new(["a", "b", "c"]).unwrap());
        let calls = Layer::from_edges("calls", true, r.clone(), [(2, 0), (0, 2), (1, 0)]).unwrap();
        let prox = Layer::from_edges("proximity", false, r.clone(), [(2, 1), (1, 0)]).unwrap();
        let m = MultiplexGraph::new(r, vec![calls, prox]).unwrap();
        let doc = m.to_document();
        assert_eq!(doc.layers[0].edges, vec![[0, 2], [1, 0], [2, 0]]);
        assert_eq!(doc.layers[1].edges, vec![[0, 1], [1, 2]]);
        assert!(matches!(
            MultiplexGraph::from_json(&m.to_json().replace("\"version\": 1", "\"version\": 9")),
            Err(GraphError::UnsupportedVersion(9))
        ));
    }

    fn arb_multiplex() -> impl Strategy<Value = MultiplexGraph> {
        (2usize..9, 1usize..4).prop_flat_map(|(n, m)| {
            proptest::collection::vec(
                (any::<bool>(), proptest::collection::vec(any::<bool>(), n * n)),
                m,
            )
            .prop_map(move |specs| {
                let r = roster(n);
                let layers = specs
                    .into_iter()
                    .enumerate()
                    .map(|(k, (directed, bits))| {
                        let edges = (0..n * n)
                            .filter(|&x| bits[x] && x / n != x % n)
                            .map(|x| (x / n, x % n));
                        Layer::from_edges(format!("l{k}"), directed, r.clone(), edges).unwrap()
                    })
                    .collect();
                MultiplexGraph::new(r, layers).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn json_round_trip_is_lossless(m in arb_multiplex()) {
            let text = m.to_json();
            let back = MultiplexGraph::from_json(&text).unwrap();
            prop_assert_eq!(&back, &m);
            prop_assert_eq!(back.to_json(), text);
        }

        #[test]
        fn undirected_layers_are_symmetric(m in arb_multiplex()) {
            let n = m.node_count();
            for layer in m.layers() {
                for i in 0..n {
                    prop_assert!(!layer.has_arc(i, i));
                    for j in 0..n {
                        if !layer.directed() {
                            prop_assert_eq!(layer.has_arc(i, j), layer.has_arc(j, i));
                        }
                    }
                }
            }
        }
    }
}
