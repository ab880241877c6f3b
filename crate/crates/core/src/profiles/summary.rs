use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use super::registry::{Registry, SummaryMode};
use super::ProfileError;
use crate::graph::Roster;

/// Repeated answers of one participant to one survey attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeSeries {
    pub participant: String,
    pub attribute: String,
    /// `(survey_index, value)`, strictly increasing in survey index.
    pub observations: Vec<(u32, f64)>,
}

impl AttributeSeries {
    pub fn new(
        participant: impl Into<String>,
        attribute: impl Into<String>,
        mut observations: Vec<(u32, f64)>,
    ) -> Result<Self, ProfileError> {
        let participant = participant.into();
        let attribute = attribute.into();
        observations.sort_by_key(|&(wave, _)| wave);
        if let Some(w) = observations.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(ProfileError::DuplicateObservation {
                participant,
                attribute,
                survey: w[0].0,
            });
        }
        Ok(AttributeSeries {
            participant,
            attribute,
            observations,
        })
    }
}

/// Collapses a series to one value; `None` when nothing was reported.
pub fn summarize(series: &AttributeSeries, mode: SummaryMode) -> Result<Option<f64>, ProfileError> {
    let obs = &series.observations;
    if obs.is_empty() {
        return Ok(None);
    }
    let value = match mode {
        SummaryMode::TMax => obs.last().map(|&(_, v)| v).expect("non-empty"),
        SummaryMode::TAvg => obs.iter().map(|&(_, v)| v).sum::<f64>() / obs.len() as f64,
        SummaryMode::Actual => {
            let first = obs[0].1;
            if obs.iter().any(|&(_, v)| v != first) {
                return Err(ProfileError::ConflictingActual {
                    participant: series.participant.clone(),
                    attribute: series.attribute.clone(),
                });
            }
            first
        }
    };
    Ok(Some(value))
}

/// Long-format survey answers grouped per participant and attribute.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SurveyTable {
    /// Keyed by `(participant, attribute)`.
    pub series: BTreeMap<(String, String), AttributeSeries>,
    pub dropped_external: usize,
    pub missing_values: usize,
}

/// Reads `participant,attribute,category,survey_index,value` rows.
///
/// Values must fall in the registry range of their attribute and the
/// category column must agree with the registry. Empty or `NA` values are
/// skipped and counted as missing.
pub fn parse_surveys(
    source: impl Read,
    registry: &Registry,
    roster: &Roster,
) -> Result<SurveyTable, ProfileError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| ProfileError::MissingColumn(name.to_string()))
    };
    let (p_col, a_col, c_col, w_col, v_col) = (
        col("participant")?,
        col("attribute")?,
        col("category")?,
        col("survey_index")?,
        col("value")?,
    );

    let mut table = SurveyTable::default();
    let mut raw: BTreeMap<(String, String), Vec<(u32, f64)>> = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let get = |c: usize| record.get(c).unwrap_or_default();
        let participant = get(p_col);
        if !roster.contains(participant) {
            table.dropped_external += 1;
            continue;
        }
        let attribute = get(a_col);
        let (category, spec) =
            registry
                .attribute(attribute)
                .ok_or_else(|| ProfileError::UnknownAttribute {
                    line,
                    attribute: attribute.to_string(),
                })?;
        if category.name != get(c_col) {
            return Err(ProfileError::WrongCategory {
                line,
                attribute: attribute.to_string(),
                expected: category.name.clone(),
                found: get(c_col).to_string(),
            });
        }
        let raw_value = get(v_col);
        if matches!(raw_value, "" | "NA" | "NaN" | "nan") {
            table.missing_values += 1;
            continue;
        }
        let malformed = |message: String| ProfileError::Malformed { line, message };
        let value: f64 = raw_value
            .parse()
            .map_err(|_| malformed(format!("value `{raw_value}` is not numeric")))?;
        if !spec.contains(value) {
            return Err(ProfileError::OutOfRange {
                line,
                attribute: attribute.to_string(),
                value,
                min: spec.min,
                max: spec.max,
            });
        }
        let wave: u32 = get(w_col)
            .parse()
            .map_err(|_| malformed(format!("survey index `{}` is not an integer", get(w_col))))?;
        raw.entry((participant.to_string(), attribute.to_string()))
            .or_default()
            .push((wave, value));
    }
    for ((participant, attribute), obs) in raw {
        let series = AttributeSeries::new(participant.clone(), attribute.clone(), obs)?;
        table.series.insert((participant, attribute), series);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(obs: &[(u32, f64)]) -> AttributeSeries {
        AttributeSeries::new("p", "a", obs.to_vec()).unwrap()
    }

    #[test]
    fn summary_modes() {
        assert_eq!(summarize(&series(&[(1, 2.0)]), SummaryMode::TAvg).unwrap(), Some(2.0));
        assert_eq!(
            summarize(&series(&[(1, 1.0), (2, 3.0)]), SummaryMode::TMax).unwrap(),
            Some(3.0)
        );
        assert_eq!(
            summarize(&series(&[(1, 1.0), (2, 2.0), (3, 6.0)]), SummaryMode::TAvg).unwrap(),
            Some(3.0)
        );
        assert_eq!(summarize(&series(&[(4, 5.0)]), SummaryMode::Actual).unwrap(), Some(5.0));
        assert_eq!(summarize(&series(&[]), SummaryMode::TMax).unwrap(), None);
    }

    #[test]
    fn t_max_uses_last_available_wave() {
        // wave 6 missing: the wave-4 answer is the final one reported
        assert_eq!(
            summarize(&series(&[(4, 2.0), (1, 7.0)]), SummaryMode::TMax).unwrap(),
            Some(2.0)
        );
    }

    #[test]
    fn conflicting_actual_values() {
        assert!(matches!(
            summarize(&series(&[(1, 1.0), (2, 2.0)]), SummaryMode::Actual),
            Err(ProfileError::ConflictingActual { .. })
        ));
    }

    #[test]
    fn duplicate_waves_are_rejected() {
        assert!(matches!(
            AttributeSeries::new("p", "a", vec![(1, 1.0), (1, 2.0)]),
            Err(ProfileError::DuplicateObservation { survey: 1, .. })
        ));
    }

    #[test]
    fn parse_validates_rows() {
        let registry = Registry::default();
        let roster = Roster::new(["a", "b"]).unwrap();
        let ok = "participant,attribute,category,survey_index,value\n\
                  a,jazz,music,1,2\n\
                  a,jazz,music,2,NA\n\
                  z,jazz,music,1,2\n";
        let t = parse_surveys(ok.as_bytes(), &registry, &roster).unwrap();
        assert_eq!(t.series.len(), 1);
        assert_eq!((t.missing_values, t.dropped_external), (1, 1));

        let out_of_range = "participant,attribute,category,survey_index,value\na,jazz,music,1,4\n";
        assert!(matches!(
            parse_surveys(out_of_range.as_bytes(), &registry, &roster),
            Err(ProfileError::OutOfRange { line: 2, .. })
        ));
        let wrong_cat = "participant,attribute,category,survey_index,value\na,jazz,health,1,1\n";
        assert!(matches!(
            parse_surveys(wrong_cat.as_bytes(), &registry, &roster),
            Err(ProfileError::WrongCategory { .. })
        ));
        let unknown = "participant,attribute,category,survey_index,value\na,kazoo,music,1,1\n";
        assert!(matches!(
            parse_surveys(unknown.as_bytes(), &registry, &roster),
            Err(ProfileError::UnknownAttribute { .. })
        ));
    }
}
