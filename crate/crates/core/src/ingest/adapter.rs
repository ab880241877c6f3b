//! Config-driven conversion of a raw dataset release into the canonical
//! `events.csv`, `relationships.csv`, `surveys.csv` and `roster.txt`.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::events::{parse_events, EventSchema, InteractionEvent, StudyWindow};
use super::relationships::{parse_relationships, RelationshipSchema};
use super::{column_index, is_missing, line_of, IngestError};
use crate::graph::Roster;

type WaveOf = Box<dyn Fn(&csv::StringRecord) -> Result<u32, IngestError>>;

#[derive(Debug, Error)]
#[error("checksum mismatch for {file}: expected {expected}, found {found}")]
pub struct ChecksumMismatch {
    pub file: String,
    pub expected: String,
    pub found: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdapterConfig {
    pub name: String,
    /// Number of relationship survey waves.
    pub surveys: u32,
    pub roster: RosterSource,
    pub window: Option<StudyWindow>,
    #[serde(default)]
    pub events: Vec<EventSource>,
    pub relationships: RelationshipSource,
    #[serde(default)]
    pub profiles: Vec<SurveySource>,
    /// Expected SHA-256 of raw files, keyed by path relative to the raw dir.
    #[serde(default)]
    pub checksums: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RosterSource {
    pub path: String,
    pub column: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventSource {
    pub path: String,
    pub schema: EventSchema,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationshipSource {
    pub path: String,
    pub schema: RelationshipSchema,
}

/// A wide survey file: one row per participant and wave, one column per
/// attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurveySource {
    pub path: String,
    pub category: String,
    pub participant_column: String,
    pub wave: SurveyWave,
    /// Attribute name -> source column.
    pub attributes: BTreeMap<String, String>,
    /// Text answers -> numeric codes, shared by all attribute columns.
    #[serde(default)]
    pub value_map: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SurveyWave {
    /// Every row belongs to the same wave (one-off questionnaires).
    Fixed(u32),
    /// Wave taken from a column; explicit `values` or, when empty, the rank
    /// of the value among the column's sorted distinct values.
    Column {
        column: String,
        #[serde(default)]
        values: BTreeMap<String, u32>,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConversionSummary {
    pub participants: usize,
    pub events: usize,
    pub dropped_external_events: usize,
    pub dropped_outside_window: usize,
    pub reports: usize,
    pub dropped_external_reports: usize,
    pub ignored_relations: usize,
    pub survey_rows: usize,
    pub dropped_survey_rows: usize,
}

impl AdapterConfig {
    pub fn from_toml(text: &str) -> Result<Self, IngestError> {
        toml::from_str(text).map_err(|e| IngestError::Adapter(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, IngestError> {
        AdapterConfig::from_toml(&fs::read_to_string(path)?)
    }

    fn raw_files(&self) -> Vec<&str> {
        let mut files: BTreeSet<&str> = BTreeSet::new();
        files.insert(&self.roster.path);
        files.extend(self.events.iter().map(|e| e.path.as_str()));
        files.insert(&self.relationships.path);
        files.extend(self.profiles.iter().map(|p| p.path.as_str()));
        files.into_iter().collect()
    }
}

fn sha256_file(path: &Path) -> Result<String, IngestError> {
    let mut hasher = Sha256::new();
    std::io::copy(&mut File::open(path)?, &mut hasher)?;
    Ok(hex::encode(hasher.finalize()))
}

fn verify_checksums(config: &AdapterConfig, raw_dir: &Path) -> Result<(), IngestError> {
    for file in config.raw_files() {
        let Some(expected) = config.checksums.get(file) else {
            continue;
        };
        let found = sha256_file(&raw_dir.join(file))?;
        if !found.eq_ignore_ascii_case(expected) {
            return Err(ChecksumMismatch {
                file: file.to_string(),
                expected: expected.clone(),
                found,
            }
            .into());
        }
    }
    Ok(())
}

fn open(raw_dir: &Path, file: &str) -> Result<BufReader<File>, IngestError> {
    let path: PathBuf = raw_dir.join(file);
    File::open(&path)
        .map(BufReader::new)
        .map_err(|e| IngestError::Adapter(format!("{}: {e}", path.display())))
}

fn read_roster_column(raw_dir: &Path, source: &RosterSource) -> Result<Roster, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(open(raw_dir, &source.path)?);
    let col = column_index(&reader.headers()?.clone(), &source.column)?;
    let mut ids = BTreeSet::new();
    for record in reader.records() {
        let record = record?;
        if let Some(id) = record.get(col).filter(|v| !is_missing(v)) {
            ids.insert(id.to_string());
        }
    }
    let mut ids: Vec<String> = ids.into_iter().collect();
    // numeric IDs sort numerically, everything else lexicographically
    ids.sort_by(|a, b| match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y),
        _ => a.cmp(b),
    });
    Ok(Roster::new(ids)?)
}

fn iso(ts: i64) -> String {
    DateTime::from_timestamp(ts, 0)
        .map(|t| t.to_rfc3339_opts(SecondsFormat::Secs, true))
        .unwrap_or_else(|| ts.to_string())
}

type SurveyRow = (String, String, String, u32, String);

fn convert_survey(
    raw_dir: &Path,
    source: &SurveySource,
    roster: &Roster,
    rows: &mut BTreeSet<SurveyRow>,
) -> Result<usize, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(open(raw_dir, &source.path)?);
    let headers = reader.headers()?.clone();
    let participant_col = column_index(&headers, &source.participant_column)?;
    let columns = source
        .attributes
        .iter()
        .map(|(attr, col)| Ok((attr.as_str(), column_index(&headers, col)?)))
        .collect::<Result<Vec<_>, IngestError>>()?;
    let records = reader.records().collect::<Result<Vec<_>, _>>()?;

    let wave_of: WaveOf = match &source.wave {
        SurveyWave::Fixed(w) => {
            let w = *w;
            Box::new(move |_| Ok(w))
        }
        SurveyWave::Column { column, values } => {
            let col = column_index(&headers, column)?;
            let map: BTreeMap<String, u32> = if values.is_empty() {
                let distinct: BTreeSet<String> = records
                    .iter()
                    .filter_map(|r| r.get(col).map(str::to_string))
                    .collect();
                distinct
                    .into_iter()
                    .enumerate()
                    .map(|(k, v)| (v, k as u32 + 1))
                    .collect()
            } else {
                values.clone()
            };
            Box::new(move |r: &csv::StringRecord| {
                let raw = r.get(col).unwrap_or_default();
                map.get(raw).copied().ok_or_else(|| IngestError::Malformed {
                    line: line_of(r),
                    message: format!("unmapped survey wave `{raw}`"),
                })
            })
        }
    };

    let mut dropped = 0;
    for record in &records {
        let participant = record.get(participant_col).unwrap_or_default();
        if !roster.contains(participant) {
            dropped += 1;
            continue;
        }
        let wave = wave_of(record)?;
        for &(attr, col) in &columns {
            let raw = record.get(col).unwrap_or_default();
            if is_missing(raw) {
                continue;
            }
            let value = match source.value_map.get(raw) {
                Some(v) => *v,
                None => raw.parse::<f64>().map_err(|_| IngestError::Malformed {
                    line: line_of(record),
                    message: format!("value `{raw}` for `{attr}` is neither numeric nor mapped"),
                })?,
            };
            rows.insert((
                participant.to_string(),
                attr.to_string(),
                source.category.clone(),
                wave,
                value.to_string(),
            ));
        }
    }
    Ok(dropped)
}

fn write_csv(path: &Path, header: &str, rows: impl IntoIterator<Item = String>) -> Result<(), IngestError> {
    let mut file = fs::File::create(path)?;
    writeln!(file, "{header}")?;
    for row in rows {
        writeln!(file, "{row}")?;
    }
    Ok(())
}

/// Converts `raw_dir` into canonical files under `out_dir`.
pub fn convert_dataset(
    config: &AdapterConfig,
    raw_dir: &Path,
    out_dir: &Path,
) -> Result<ConversionSummary, IngestError> {
    verify_checksums(config, raw_dir)?;
    let roster = read_roster_column(raw_dir, &config.roster)?;
    let mut summary = ConversionSummary {
        participants: roster.len(),
        ..Default::default()
    };

    let mut events: Vec<InteractionEvent> = Vec::new();
    for source in &config.events {
        let parsed = parse_events(
            open(raw_dir, &source.path)?,
            &source.schema,
            &roster,
            config.window.as_ref(),
        )?;
        summary.dropped_external_events += parsed.dropped_external;
        summary.dropped_outside_window += parsed.dropped_outside_window;
        events.extend(parsed.events);
    }
    events.sort_by(|a, b| {
        (a.timestamp, a.channel, &a.src, &a.dst).cmp(&(b.timestamp, b.channel, &b.src, &b.dst))
    });
    summary.events = events.len();

    let reports = parse_relationships(
        open(raw_dir, &config.relationships.path)?,
        &config.relationships.schema,
        &roster,
        config.surveys,
    )?;
    summary.reports = reports.reports.len();
    summary.dropped_external_reports = reports.dropped_external;
    summary.ignored_relations = reports.ignored_relations;

    let mut survey_rows = BTreeSet::new();
    for source in &config.profiles {
        summary.dropped_survey_rows += convert_survey(raw_dir, source, &roster, &mut survey_rows)?;
    }
    summary.survey_rows = survey_rows.len();

    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join(super::ROSTER_FILE), super::write_roster(&roster))?;
    write_csv(
        &out_dir.join(super::EVENTS_FILE),
        "src,dst,channel,timestamp",
        events
            .iter()
            .map(|e| format!("{},{},{},{}", e.src, e.dst, e.channel, iso(e.timestamp))),
    )?;
    let mut report_rows: Vec<_> = reports
        .reports
        .iter()
        .map(|r| (r.reporter.clone(), r.target.clone(), r.relation, r.survey_index))
        .collect();
    report_rows.sort();
    report_rows.dedup();
    write_csv(
        &out_dir.join(super::RELATIONSHIPS_FILE),
        "reporter,target,relation,survey_index",
        report_rows
            .into_iter()
            .map(|(a, b, r, w)| format!("{a},{b},{r},{w}")),
    )?;
    write_csv(
        &out_dir.join(super::SURVEYS_FILE),
        "participant,attribute,category,survey_index,value",
        survey_rows
            .into_iter()
            .map(|(p, a, c, w, v)| format!("{p},{a},{c},{w},{v}")),
    )?;
    Ok(summary)
}
