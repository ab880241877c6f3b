use serde::{Deserialize, Serialize};

use super::{fmt_opt, StatsError};
use crate::graph::Layer;
use crate::ingest::LabelMap;
use crate::matrix::WeightedMatrix;

/// Mean offline minus mean online similarity for one ego.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiversityDelta {
    pub participant: String,
    pub category: String,
    /// `None` unless both neighbourhoods are non-empty.
    pub delta: Option<f64>,
    pub n_offline: usize,
    pub n_online: usize,
    pub mean_offline: Option<f64>,
    pub mean_online: Option<f64>,
}

/// Online neighbours carry a declared relationship from the ego; offline
/// neighbours are tied in `union` with no declared relationship. Neighbours
/// without a defined similarity to the ego are left out of both.
pub fn diversity_delta(
    labels: &LabelMap,
    union: &Layer,
    sim: &WeightedMatrix,
    participant: &str,
    category: &str,
) -> Result<DiversityDelta, StatsError> {
    check_rosters(labels, union, sim)?;
    let i = labels
        .roster()
        .index_of(participant)
        .ok_or_else(|| StatsError::UnknownParticipant(participant.to_string()))?;
    Ok(delta_at(labels, union, sim, i, category))
}

fn check_rosters(labels: &LabelMap, union: &Layer, sim: &WeightedMatrix) -> Result<(), StatsError> {
    if **labels.roster() != **union.roster() || **labels.roster() != **sim.roster() {
        return Err(StatsError::RosterMismatch);
    }
    Ok(())
}

fn delta_at(
    labels: &LabelMap,
    union: &Layer,
    sim: &WeightedMatrix,
    i: usize,
    category: &str,
) -> DiversityDelta {
    let mut online = Vec::new();
    let mut offline = Vec::new();
    for j in (0..sim.len()).filter(|&j| j != i) {
        let Some(s) = sim.get(i, j) else { continue };
        if labels.get(i, j).is_declared() {
            online.push(s);
        } else if union.connected(i, j) {
            offline.push(s);
        }
    }
    let mean_offline = mean(&offline);
    let mean_online = mean(&online);
    DiversityDelta {
        participant: labels.roster().id(i).to_string(),
        category: category.to_string(),
        delta: mean_offline.zip(mean_online).map(|(off, on)| off - on),
        n_offline: offline.len(),
        n_online: online.len(),
        mean_offline,
        mean_online,
    }
}

fn mean(x: &[f64]) -> Option<f64> {
    (!x.is_empty()).then(|| x.iter().sum::<f64>() / x.len() as f64)
}

/// [`diversity_delta`] for every participant, in roster order.
pub fn diversity_deltas(
    labels: &LabelMap,
    union: &Layer,
    sim: &WeightedMatrix,
    category: &str,
) -> Result<Vec<DiversityDelta>, StatsError> {
    check_rosters(labels, union, sim)?;
    Ok((0..sim.len())
        .map(|i| delta_at(labels, union, sim, i, category))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiveNumber {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Five-number summary with linearly interpolated quartiles
/// (position `p (n − 1)` in the sorted sample).
pub fn quartiles(values: &[f64]) -> Option<FiveNumber> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let pos = p * (v.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
    };
    Some(FiveNumber {
        min: v[0],
        q1: q(0.25),
        median: q(0.5),
        q3: q(0.75),
        max: v[v.len() - 1],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaSummary {
    pub category: String,
    pub summary: FiveNumber,
    pub defined: usize,
    pub undefined: usize,
    pub fraction_positive: f64,
}

impl DeltaSummary {
    /// `category,min,q1,median,q3,max,defined,undefined,fraction_positive`.
    pub fn csv_header() -> &'static str {
        "category,min,q1,median,q3,max,defined,undefined,fraction_positive\n"
    }

    pub fn csv_row(&self) -> String {
        let s = &self.summary;
        format!(
            "{},{},{},{},{},{},{},{},{}\n",
            self.category, s.min, s.q1, s.median, s.q3, s.max, self.defined, self.undefined,
            self.fraction_positive
        )
    }
}

/// Distribution of the defined deltas of one category.
pub fn delta_distribution(
    deltas: &[DiversityDelta],
    category: &str,
) -> Result<DeltaSummary, StatsError> {
    let of_category: Vec<&DiversityDelta> =
        deltas.iter().filter(|d| d.category == category).collect();
    let defined: Vec<f64> = of_category.iter().filter_map(|d| d.delta).collect();
    let summary =
        quartiles(&defined).ok_or_else(|| StatsError::NoDefinedDeltas(category.to_string()))?;
    Ok(DeltaSummary {
        category: category.to_string(),
        summary,
        defined: defined.len(),
        undefined: of_category.len() - defined.len(),
        fraction_positive: defined.iter().filter(|&&d| d > 0.0).count() as f64
            / defined.len() as f64,
    })
}

/// `participant,category,delta,n_offline,n_online,mean_offline,mean_online`.
pub fn deltas_csv(deltas: &[DiversityDelta]) -> String {
    let mut out =
        String::from("participant,category,delta,n_offline,n_online,mean_offline,mean_online\n");
    for d in deltas {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            d.participant,
            d.category,
            fmt_opt(d.delta),
            d.n_offline,
            d.n_online,
            fmt_opt(d.mean_offline),
            fmt_opt(d.mean_online)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Roster;
    use crate::ingest::RelationshipLabel;
    use crate::matrix::MatrixKind;
    use std::sync::Arc;

    fn fixture() -> (LabelMap, Layer, WeightedMatrix) {
        let roster = Arc::new(Roster::numbered(4));
        let union =
            Layer::from_edges("union", false, Arc::clone(&roster), [(0, 1), (0, 2)]).unwrap();
        let mut labels = LabelMap::unlabelled(Arc::clone(&roster));
        labels.set(0, 2, RelationshipLabel::FbOnly);
        labels.set(0, 3, RelationshipLabel::CloseFriend);
        labels.set(3, 0, RelationshipLabel::Socialize);
        let mut sim = WeightedMatrix::filled(MatrixKind::Similarity, roster, f64::NAN);
        for (i, j, s) in [(0, 1, 1.0), (0, 2, 0.4), (0, 3, 0.6), (1, 2, 0.5)] {
            sim.set(i, j, s);
            sim.set(j, i, s);
        }
        (labels, union, sim)
    }

    #[test]
    fn offline_minus_online() {
        let (labels, union, sim) = fixture();
        let d = diversity_delta(&labels, &union, &sim, "0", "music").unwrap();
        assert_eq!((d.n_offline, d.n_online), (1, 2));
        assert!((d.delta.unwrap() - 0.5).abs() < 1e-15);
        // participant 1 has only an offline neighbour
        let d = diversity_delta(&labels, &union, &sim, "1", "music").unwrap();
        assert_eq!(d.delta, None);
        assert!(matches!(
            diversity_delta(&labels, &union, &sim, "9", "music"),
            Err(StatsError::UnknownParticipant(_))
        ));
    }

    #[test]
    fn distribution_summaries() {
        let mk = |v: Option<f64>| DiversityDelta {
            participant: "p".into(),
            category: "c".into(),
            delta: v,
            n_offline: 1,
            n_online: 1,
            mean_offline: None,
            mean_online: None,
        };
        let s = delta_distribution(&[mk(Some(0.2))], "c").unwrap().summary;
        assert_eq!([s.min, s.q1, s.median, s.q3, s.max], [0.2; 5]);
        let d = delta_distribution(&[mk(Some(-1.0)), mk(Some(1.0)), mk(Some(0.0)), mk(None)], "c")
            .unwrap();
        assert_eq!(d.summary.median, 0.0);
        assert_eq!(d.summary.q1, -0.5);
        assert_eq!((d.defined, d.undefined), (3, 1));
        assert!(matches!(
            delta_distribution(&[mk(None)], "c"),
            Err(StatsError::NoDefinedDeltas(_))
        ));
    }

    #[test]
    fn deltas_table_leaves_undefined_blank() {
        let (labels, union, sim) = fixture();
        let all = diversity_deltas(&labels, &union, &sim, "music").unwrap();
        assert_eq!(all.len(), 4);
        assert!(deltas_csv(&all).contains("\n1,music,,1,0,1,\n"));
    }
}
