//! Parsing of communication logs, relationship surveys and rosters into
//! multiplex layers and directed ground-truth labels.

mod adapter;
mod events;
mod relationships;

use std::io::{BufRead, BufReader, Read};

use thiserror::Error;

use crate::graph::{GraphError, Roster};

pub use adapter::{AdapterConfig, ChecksumMismatch, EventSource, SurveySource, convert_dataset};
pub use events::{
    build_layer, build_multiplex, parse_events, Channel, EventSchema, InteractionEvent,
    ParsedEvents, StudyWindow, TimestampFormat,
};
pub use relationships::{
    label_relationships, parse_relationships, qualifying_threshold, HierarchyViolation,
    LabelCounts, LabelMap, ParsedReports, Relation, RelationshipLabel, RelationshipReport,
    RelationshipSchema,
};

/// Canonical dataset file names.
pub const ROSTER_FILE: &str = "roster.txt";
pub const EVENTS_FILE: &str = "events.csv";
pub const RELATIONSHIPS_FILE: &str = "relationships.csv";
pub const SURVEYS_FILE: &str = "surveys.csv";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("line {line}: unknown channel `{value}`")]
    UnknownChannel { line: u64, value: String },
    #[error("line {line}: unknown relation `{value}`")]
    UnknownRelation { line: u64, value: String },
    #[error("line {line}: cannot parse timestamp `{value}`")]
    Timestamp { line: u64, value: String },
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("participant `{0}` is not in the roster")]
    UnknownParticipant(String),
    #[error("survey index {index} outside 1..={surveys}")]
    SurveyIndex { index: u32, surveys: u32 },
    #[error("survey count must be at least 1")]
    NoSurveys,
    #[error("`{0}` reports a relationship with themselves")]
    SelfReport(String),
    #[error("invalid study window: {0}")]
    Window(String),
    #[error("adapter: {0}")]
    Adapter(String),
    #[error(transparent)]
    Checksum(#[from] ChecksumMismatch),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Reads a roster: one participant ID per line, blank lines and `#`
/// comments ignored, order preserved.
pub fn read_roster(reader: impl Read) -> Result<Roster, IngestError> {
    let mut ids = Vec::new();
    for line in BufReader::new(reader).lines() {
        let line = line?;
        let id = line.trim();
        if id.is_empty() || id.starts_with('#') {
            continue;
        }
        ids.push(id.to_string());
    }
    Ok(Roster::new(ids)?)
}

pub fn write_roster(roster: &Roster) -> String {
    let mut out = String::new();
    for id in roster.ids() {
        out.push_str(id);
        out.push('\n');
    }
    out
}

/// Maps header names to column positions.
pub(crate) fn column_index(
    headers: &csv::StringRecord,
    name: &str,
) -> Result<usize, IngestError> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| IngestError::MissingColumn(name.to_string()))
}

pub(crate) fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(0)
}

/// Treats empty strings and the usual NA spellings as missing.
pub(crate) fn is_missing(value: &str) -> bool {
    matches!(value.trim(), "" | "NA" | "N/A" | "na" | "NaN" | "nan" | "null" | "NULL")
}
