//! Survey attributes summarized into per-category profile vectors, and the
//! cosine similarity between them.

mod registry;
mod similarity;
mod summary;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Roster;

pub use registry::{AttributeSpec, CategorySpec, Registry, SummaryMode, DEFAULT_REGISTRY};
pub use similarity::{cosine_similarity, similarity_matrix, SimilarityMatrix};
pub use summary::{parse_surveys, summarize, AttributeSeries, SurveyTable};

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("registry: {0}")]
    Registry(String),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("line {line}: unknown attribute `{attribute}`")]
    UnknownAttribute { line: u64, attribute: String },
    #[error("line {line}: attribute `{attribute}` belongs to `{expected}`, not `{found}`")]
    WrongCategory {
        line: u64,
        attribute: String,
        expected: String,
        found: String,
    },
    #[error("line {line}: `{attribute}` value {value} outside [{min}, {max}]")]
    OutOfRange {
        line: u64,
        attribute: String,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("`{participant}` answered `{attribute}` twice in survey {survey}")]
    DuplicateObservation {
        participant: String,
        attribute: String,
        survey: u32,
    },
    #[error("`{participant}` reported different values for `{attribute}`")]
    ConflictingActual {
        participant: String,
        attribute: String,
    },
    #[error("unknown category `{0}`")]
    UnknownCategory(String),
    #[error("cannot compare a `{0}` profile with a `{1}` profile")]
    CategoryMismatch(String, String),
    #[error("profile vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("cosine similarity is undefined for the all-zero profile of `{0}`")]
    ZeroVector(String),
    #[error("category `{category}` has {defined} usable profiles; at least 2 are needed")]
    TooFewProfiles { category: String, defined: usize },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A participant's attributes for one category, in registry order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileVector {
    pub participant: String,
    pub category: String,
    pub values: Vec<f64>,
    pub summary_modes: Vec<SummaryMode>,
}

/// Profile vectors per category, plus who was left out for missing answers.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProfileSet {
    pub vectors: BTreeMap<String, Vec<ProfileVector>>,
    /// Participants lacking at least one attribute, per category.
    pub incomplete: BTreeMap<String, Vec<String>>,
}

impl ProfileSet {
    pub fn category(&self, name: &str) -> &[ProfileVector] {
        self.vectors.get(name).map(Vec::as_slice).unwrap_or_default()
    }
}

/// Builds one vector per participant and category. A participant missing
/// any attribute of a category gets no vector for it. With `normalize`, each
/// value is min-max scaled by its registry range.
pub fn build_profiles(
    table: &SurveyTable,
    registry: &Registry,
    roster: &Roster,
    normalize: bool,
) -> Result<ProfileSet, ProfileError> {
    let mut set = ProfileSet::default();
    for category in &registry.categories {
        let mut vectors = Vec::new();
        let mut incomplete = Vec::new();
        'participants: for id in roster.ids() {
            let mut values = Vec::with_capacity(category.attributes.len());
            for attr in &category.attributes {
                let summary = match table.series.get(&(id.clone(), attr.name.clone())) {
                    Some(series) => summarize(series, attr.summary)?,
                    None => None,
                };
                match summary {
                    Some(v) if normalize => values.push(attr.normalize(v)),
                    Some(v) => values.push(v),
                    None => {
                        incomplete.push(id.clone());
                        continue 'participants;
                    }
                }
            }
            vectors.push(ProfileVector {
                participant: id.clone(),
                category: category.name.clone(),
                values,
                summary_modes: category.attributes.iter().map(|a| a.summary).collect(),
            });
        }
        set.vectors.insert(category.name.clone(), vectors);
        set.incomplete.insert(category.name.clone(), incomplete);
    }
    Ok(set)
}
