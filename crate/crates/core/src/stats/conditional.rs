use serde::{Deserialize, Serialize};

use super::{check_aligned, fmt_num, fmt_opt, StatsError};
use crate::matrix::{MatrixKind, WeightedMatrix};

/// Values within this distance of a bin edge are placed as if exactly on it.
pub const SNAP: f64 = 1e-9;

/// Strictly increasing edges from 0 to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct BinEdges(Vec<f64>);

impl BinEdges {
    pub fn new(edges: Vec<f64>) -> Result<Self, StatsError> {
        let bad = |m: &str| Err(StatsError::BadBins(m.to_string()));
        if edges.len() < 2 {
            return bad("need at least two edges");
        }
        if edges.iter().any(|e| !e.is_finite()) {
            return bad("edges must be finite");
        }
        if edges[0] != 0.0 || edges[edges.len() - 1] != 1.0 {
            return bad("edges must start at 0 and end at 1");
        }
        if edges.windows(2).any(|w| w[1] <= w[0]) {
            return bad("edges must be strictly increasing");
        }
        Ok(BinEdges(edges))
    }

    /// `0, 1/k, ..., 1`.
    pub fn uniform(k: usize) -> Self {
        let k = k.max(1);
        BinEdges((0..=k).map(|i| i as f64 / k as f64).collect())
    }

    pub fn edges(&self) -> &[f64] {
        &self.0
    }

    /// Index of the right-closed interval containing `v` (the first one is
    /// closed on both ends).
    fn interval(&self, v: f64) -> usize {
        let e = &self.0;
        (1..e.len())
            .find(|&k| v <= e[k] + SNAP)
            .map_or(e.len() - 2, |k| k - 1)
    }
}

impl Default for BinEdges {
    fn default() -> Self {
        BinEdges::uniform(10)
    }
}

impl TryFrom<Vec<f64>> for BinEdges {
    type Error = StatsError;

    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        BinEdges::new(v)
    }
}

impl From<BinEdges> for Vec<f64> {
    fn from(b: BinEdges) -> Self {
        b.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub lower: f64,
    pub upper: f64,
    pub lower_closed: bool,
    pub upper_closed: bool,
}

impl Bin {
    fn point(x: f64) -> Self {
        Bin {
            lower: x,
            upper: x,
            lower_closed: true,
            upper_closed: true,
        }
    }

    pub fn label(&self) -> String {
        if self.lower == self.upper {
            return format!("{{{}}}", fmt_num(self.lower));
        }
        format!(
            "{}{},{}{}",
            if self.lower_closed { '[' } else { '(' },
            fmt_num(self.lower),
            fmt_num(self.upper),
            if self.upper_closed { ']' } else { ')' },
        )
    }
}

/// Similarity bins: `[e0, e1], (e1, e2], ..., (e_{k-1}, e_k]`.
fn similarity_bins(edges: &BinEdges) -> Vec<Bin> {
    edges
        .edges()
        .windows(2)
        .enumerate()
        .map(|(k, w)| Bin {
            lower: w[0],
            upper: w[1],
            lower_closed: k == 0,
            upper_closed: true,
        })
        .collect()
}

/// Distance bins: `{0}`, `(e0, e1], ..., (e_{k-1}, e_k)`, `{1}`. Zero is a
/// fully multiplex tie and one is the no-path value, so both get their own bin.
fn distance_bins(edges: &BinEdges) -> Vec<Bin> {
    let e = edges.edges();
    let last = e.len() - 2;
    let mut bins = vec![Bin::point(0.0)];
    bins.extend(e.windows(2).enumerate().map(|(k, w)| Bin {
        lower: w[0],
        upper: w[1],
        lower_closed: false,
        upper_closed: k != last,
    }));
    bins.push(Bin::point(1.0));
    bins
}

fn distance_bin(edges: &BinEdges, d: f64) -> usize {
    if d <= SNAP {
        0
    } else if d >= 1.0 - SNAP {
        edges.edges().len()
    } else {
        1 + edges.interval(d)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalSimilarityTable {
    pub category: String,
    pub distance_bins: Vec<Bin>,
    pub similarity_bins: Vec<Bin>,
    /// `counts[s][d]`: pairs in similarity bin `s` and distance bin `d`.
    pub counts: Vec<Vec<usize>>,
    /// `cells[s][d] = P(similarity bin s | distance bin d)`; `None` for
    /// empty distance bins.
    pub cells: Vec<Vec<Option<f64>>>,
    /// Mean similarity of the pairs in each distance bin.
    pub mean_similarity: Vec<Option<f64>>,
    pub pairs: usize,
}

impl ConditionalSimilarityTable {
    pub fn column_count(&self, d: usize) -> usize {
        self.counts.iter().map(|row| row[d]).sum()
    }

    fn to_grid<T>(&self, cells: &[Vec<T>], fmt: impl Fn(&T) -> String) -> String {
        let mut out = String::from("similarity_bin");
        for b in &self.distance_bins {
            out.push_str(&format!(",\"{}\"", b.label()));
        }
        out.push('\n');
        for (bin, row) in self.similarity_bins.iter().zip(cells) {
            out.push_str(&format!("\"{}\"", bin.label()));
            for c in row {
                out.push(',');
                out.push_str(&fmt(c));
            }
            out.push('\n');
        }
        out
    }

    /// Conditional probabilities, one row per similarity bin.
    pub fn to_csv(&self) -> String {
        self.to_grid(&self.cells, |c| fmt_opt(*c))
    }

    pub fn counts_csv(&self) -> String {
        self.to_grid(&self.counts, |c| c.to_string())
    }
}

/// `P(similarity | distance)` over unordered pairs with a defined similarity.
pub fn conditional_similarity(
    dist: &WeightedMatrix,
    sim: &WeightedMatrix,
    category: &str,
    distance_edges: &BinEdges,
    similarity_edges: &BinEdges,
) -> Result<ConditionalSimilarityTable, StatsError> {
    if dist.kind() != MatrixKind::Distance {
        return Err(StatsError::WrongKind {
            expected: "distance",
            found: dist.kind().label(),
        });
    }
    if sim.kind() != MatrixKind::Similarity {
        return Err(StatsError::WrongKind {
            expected: "similarity",
            found: sim.kind().label(),
        });
    }
    check_aligned(dist, sim)?;
    let distance_bins = distance_bins(distance_edges);
    let similarity_bins = similarity_bins(similarity_edges);
    let mut counts = vec![vec![0usize; distance_bins.len()]; similarity_bins.len()];
    let mut sums = vec![0.0; distance_bins.len()];
    let mut pairs = 0;
    let n = sim.len();
    for i in 0..n {
        for j in i + 1..n {
            let Some(s) = sim.get(i, j) else { continue };
            let d = dist.get(i, j).unwrap_or(1.0);
            let db = distance_bin(distance_edges, d);
            counts[similarity_edges.interval(s)][db] += 1;
            sums[db] += s;
            pairs += 1;
        }
    }
    if pairs == 0 {
        return Err(StatsError::EmptySupport);
    }
    let totals: Vec<usize> = (0..distance_bins.len())
        .map(|d| counts.iter().map(|row| row[d]).sum())
        .collect();
    let cells = counts
        .iter()
        .map(|row| {
            row.iter()
                .zip(&totals)
                .map(|(&c, &t)| (t > 0).then(|| c as f64 / t as f64))
                .collect()
        })
        .collect();
    let mean_similarity = sums
        .iter()
        .zip(&totals)
        .map(|(&s, &t)| (t > 0).then(|| s / t as f64))
        .collect();
    Ok(ConditionalSimilarityTable {
        category: category.to_string(),
        distance_bins,
        similarity_bins,
        counts,
        cells,
        mean_similarity,
        pairs,
    })
}
