use serde::{Deserialize, Serialize};

use super::{fmt_opt, StatsError};
use crate::graph::Layer;
use crate::ingest::{LabelCounts, LabelMap, RelationshipLabel};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairMode {
    /// Each ordered pair counts once with its own label.
    #[default]
    Directed,
    /// Each unordered pair counts once with the stronger of its two labels.
    Unordered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelProbability {
    pub label: RelationshipLabel,
    /// `None` when the aggregation has no edges.
    pub probability: Option<f64>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationshipPmf {
    pub aggregation: String,
    pub mode: PairMode,
    pub support_count: usize,
    pub probabilities: Vec<LabelProbability>,
}

impl RelationshipPmf {
    pub fn probability(&self, label: RelationshipLabel) -> Option<f64> {
        self.probabilities[label.index()].probability
    }

    /// `label,probability,count`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,probability,count\n");
        for p in &self.probabilities {
            out.push_str(&format!("{},{},{}\n", p.label, fmt_opt(p.probability), p.count));
        }
        out
    }
}

/// Empirical label distribution over the pairs tied in `agg`.
pub fn relationship_pmf(
    agg: &Layer,
    labels: &LabelMap,
    mode: PairMode,
) -> Result<RelationshipPmf, StatsError> {
    if **agg.roster() != **labels.roster() {
        return Err(StatsError::RosterMismatch);
    }
    let counts = match mode {
        PairMode::Directed => labels.counts_on(agg),
        PairMode::Unordered => {
            let mut c = LabelCounts::default();
            for (i, j) in agg.symmetrized().edges() {
                c.add(labels.get(i, j).max(labels.get(j, i)));
            }
            c
        }
    };
    let total = counts.total();
    let probabilities = RelationshipLabel::ALL
        .into_iter()
        .map(|label| {
            let count = counts.get(label);
            LabelProbability {
                label,
                probability: (total > 0).then(|| count as f64 / total as f64),
                count,
            }
        })
        .collect();
    Ok(RelationshipPmf {
        aggregation: agg.name().to_string(),
        mode,
        support_count: total,
        probabilities,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Roster;
    use std::sync::Arc;

    fn setup() -> (Layer, LabelMap) {
        let roster = Arc::new(Roster::numbered(4));
        let agg = Layer::from_edges("agg", false, Arc::clone(&roster), [(0, 1), (1, 2)]).unwrap();
        let mut labels = LabelMap::unlabelled(roster);
        labels.set(0, 1, RelationshipLabel::CloseFriend);
        labels.set(1, 0, RelationshipLabel::FbOnly);
        labels.set(2, 3, RelationshipLabel::Socialize);
        (agg, labels)
    }

    #[test]
    fn directed_counts_both_orientations() {
        let (agg, labels) = setup();
        let pmf = relationship_pmf(&agg, &labels, PairMode::Directed).unwrap();
        assert_eq!(pmf.support_count, 4);
        assert_eq!(pmf.probability(RelationshipLabel::CloseFriend), Some(0.25));
        assert_eq!(pmf.probability(RelationshipLabel::FbOnly), Some(0.25));
        assert_eq!(pmf.probability(RelationshipLabel::None), Some(0.5));
        assert_eq!(pmf.probability(RelationshipLabel::Socialize), Some(0.0));
    }

    #[test]
    fn unordered_takes_stronger_label() {
        let (agg, labels) = setup();
        let pmf = relationship_pmf(&agg, &labels, PairMode::Unordered).unwrap();
        assert_eq!(pmf.support_count, 2);
        assert_eq!(pmf.probability(RelationshipLabel::CloseFriend), Some(0.5));
        assert_eq!(pmf.probability(RelationshipLabel::None), Some(0.5));
    }

    #[test]
    fn all_none_and_empty() {
        let roster = Arc::new(Roster::numbered(3));
        let labels = LabelMap::unlabelled(Arc::clone(&roster));
        let agg = Layer::from_edges("agg", false, Arc::clone(&roster), [(0, 2)]).unwrap();
        let pmf = relationship_pmf(&agg, &labels, PairMode::Directed).unwrap();
        assert_eq!(pmf.probability(RelationshipLabel::None), Some(1.0));

        let empty = Layer::empty("e", false, roster);
        let pmf = relationship_pmf(&empty, &labels, PairMode::Directed).unwrap();
        assert_eq!(pmf.support_count, 0);
        assert!(pmf.probabilities.iter().all(|p| p.probability.is_none()));
        assert!(pmf.to_csv().contains("close_friend,,0"));
    }
}
