use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ProfileError;

/// Registry shipped with the crate, describing the four study categories.
pub const DEFAULT_REGISTRY: &str = include_str!("../../configs/registry.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SummaryMode {
    /// Last reported value.
    TMax,
    /// Mean of reported values.
    TAvg,
    /// The one value reported.
    Actual,
}

impl fmt::Display for SummaryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SummaryMode::TMax => "t_max",
            SummaryMode::TAvg => "t_avg",
            SummaryMode::Actual => "actual",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributeSpec {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub summary: SummaryMode,
}

impl AttributeSpec {
    pub fn contains(&self, value: f64) -> bool {
        value >= self.min && value <= self.max
    }

    /// Min-max scaling onto `[0, 1]`.
    pub fn normalize(&self, value: f64) -> f64 {
        if self.max > self.min {
            (value - self.min) / (self.max - self.min)
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CategorySpec {
    pub name: String,
    #[serde(rename = "attribute")]
    pub attributes: Vec<AttributeSpec>,
}

/// Categories and their attributes, in profile-vector order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Registry {
    #[serde(rename = "category")]
    pub categories: Vec<CategorySpec>,
}

impl Registry {
    pub fn from_toml(text: &str) -> Result<Self, ProfileError> {
        let registry: Registry =
            toml::from_str(text).map_err(|e| ProfileError::Registry(e.to_string()))?;
        registry.validate()?;
        Ok(registry)
    }

    pub fn validate(&self) -> Result<(), ProfileError> {
        if self.categories.is_empty() {
            return Err(ProfileError::Registry("no categories".into()));
        }
        let mut categories = BTreeSet::new();
        let mut attributes = BTreeSet::new();
        for category in &self.categories {
            if !categories.insert(category.name.as_str()) {
                return Err(ProfileError::Registry(format!(
                    "duplicate category `{}`",
                    category.name
                )));
            }
            if category.attributes.is_empty() {
                return Err(ProfileError::Registry(format!(
                    "category `{}` has no attributes",
                    category.name
                )));
            }
            for attr in &category.attributes {
                if !attributes.insert(attr.name.as_str()) {
                    return Err(ProfileError::Registry(format!(
                        "duplicate attribute `{}`",
                        attr.name
                    )));
                }
                // cosine similarity is only bounded to [0, 1] for non-negative vectors
                if !(attr.min >= 0.0 && attr.min <= attr.max && attr.max.is_finite()) {
                    return Err(ProfileError::Registry(format!(
                        "attribute `{}` needs 0 <= min <= max, got [{}, {}]",
                        attr.name, attr.min, attr.max
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn category(&self, name: &str) -> Option<&CategorySpec> {
        self.categories.iter().find(|c| c.name == name)
    }

    pub fn category_names(&self) -> impl Iterator<Item = &str> {
        self.categories.iter().map(|c| c.name.as_str())
    }

    /// `(category, attribute)` for an attribute name.
    pub fn attribute(&self, name: &str) -> Option<(&CategorySpec, &AttributeSpec)> {
        self.categories.iter().find_map(|c| {
            c.attributes
                .iter()
                .find(|a| a.name == name)
                .map(|a| (c, a))
        })
    }
}

impl Default for Registry {
    fn default() -> Self {
        Registry::from_toml(DEFAULT_REGISTRY).expect("bundled registry is valid")
    }
}
