//! Headline statistics relating multiplex structure to relationships and
//! profile similarity.

mod conditional;
mod correlation;
mod diversity;
mod pmf;
mod significance;
mod spearman;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use conditional::{conditional_similarity, Bin, BinEdges, ConditionalSimilarityTable, SNAP};
pub use correlation::{graph_correlation, node_correlation, GraphCorrelation};
pub use diversity::{
    deltas_csv, delta_distribution, diversity_delta, diversity_deltas, quartiles, DeltaSummary,
    DiversityDelta, FiveNumber,
};
pub use pmf::{relationship_pmf, LabelProbability, PairMode, RelationshipPmf};
pub use significance::{significance, Significance, MIN_PERMUTATIONS};
pub use spearman::{average_ranks, pearson, spearman, spearman_degree_rank, DegreeRank};

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("inputs do not share a roster")]
    RosterMismatch,
    #[error("expected a {expected} matrix, got {found}")]
    WrongKind {
        expected: &'static str,
        found: &'static str,
    },
    #[error("node index {0} out of range")]
    NodeOutOfRange(usize),
    #[error("unknown participant `{0}`")]
    UnknownParticipant(String),
    #[error("no node has a defined correlation coefficient")]
    NoDefinedNodes,
    #[error("at least {MIN_PERMUTATIONS} permutations are required, got {0}")]
    TooFewPermutations(usize),
    #[error("bin edges: {0}")]
    BadBins(String),
    #[error("no pair has a defined similarity")]
    EmptySupport,
    #[error("no defined diversity delta for `{0}`")]
    NoDefinedDeltas(String),
}

/// Which `b` entries enter row sums and degrees.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Masking {
    /// Only pairs with a positive entry in `a`.
    #[default]
    Support,
    /// Every defined off-diagonal entry.
    None,
}

/// Per-node coefficient formula.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationMode {
    /// `Σ ab / sqrt(Σa · Σb)`.
    #[default]
    RowSum,
    /// `Σ ab / sqrt(Σa² · Σb²)`.
    Cosine,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrelationOptions {
    #[serde(default)]
    pub masking: Masking,
    #[serde(default)]
    pub mode: CorrelationMode,
}

fn check_aligned(
    a: &crate::WeightedMatrix,
    b: &crate::WeightedMatrix,
) -> Result<(), StatsError> {
    if a.aligned_with(b) {
        Ok(())
    } else {
        Err(StatsError::RosterMismatch)
    }
}

/// Shortest decimal form, used for bin labels and CSV cells.
fn fmt_num(x: f64) -> String {
    format!("{x}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}
