use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Read;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::events::TimestampFormat;
use super::{column_index, is_missing, line_of, IngestError};
use crate::graph::{Layer, Roster};

/// A relationship type a participant can report about another.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    CloseFriend,
    SocializeTwiceWeek,
    FacebookAllTagged,
}

impl Relation {
    pub const ALL: [Relation; 3] = [
        Relation::CloseFriend,
        Relation::SocializeTwiceWeek,
        Relation::FacebookAllTagged,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Relation::CloseFriend => "close_friend",
            Relation::SocializeTwiceWeek => "socialize_twice_week",
            Relation::FacebookAllTagged => "facebook_all_tagged",
        }
    }
}

impl FromStr for Relation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Relation::ALL
            .into_iter()
            .find(|r| r.as_str() == s.trim())
            .ok_or_else(|| s.to_string())
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Definitive directed label, ordered from weakest to strongest.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum RelationshipLabel {
    #[default]
    None,
    FbOnly,
    Socialize,
    CloseFriend,
}

impl RelationshipLabel {
    pub const ALL: [RelationshipLabel; 4] = [
        RelationshipLabel::None,
        RelationshipLabel::FbOnly,
        RelationshipLabel::Socialize,
        RelationshipLabel::CloseFriend,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RelationshipLabel::None => "none",
            RelationshipLabel::FbOnly => "fb_only",
            RelationshipLabel::Socialize => "socialize",
            RelationshipLabel::CloseFriend => "close_friend",
        }
    }

    /// Any declared relationship, all of which imply Facebook presence.
    pub fn is_declared(self) -> bool {
        self != RelationshipLabel::None
    }

    pub fn index(self) -> usize {
        self as usize
    }

    fn for_relation(r: Relation) -> Self {
        match r {
            Relation::CloseFriend => RelationshipLabel::CloseFriend,
            Relation::SocializeTwiceWeek => RelationshipLabel::Socialize,
            Relation::FacebookAllTagged => RelationshipLabel::FbOnly,
        }
    }
}

impl FromStr for RelationshipLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RelationshipLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == s.trim())
            .ok_or_else(|| s.to_string())
    }
}

impl fmt::Display for RelationshipLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationshipReport {
    pub reporter: String,
    pub target: String,
    pub relation: Relation,
    /// 1-based survey wave.
    pub survey_index: u32,
}

/// Column mapping for relationship reports. Defaults describe the canonical
/// `relationships.csv` (`reporter,target,relation,survey_index`).
///
/// When `survey_index_column` is unset, each row's `survey_date_column` is
/// assigned to the nearest date in `survey_dates` (wave 1 first).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RelationshipSchema {
    pub reporter_column: String,
    pub target_column: String,
    pub relation_column: String,
    pub survey_index_column: Option<String>,
    pub survey_date_column: Option<String>,
    pub survey_date_format: TimestampFormat,
    pub survey_dates: Vec<String>,
    /// Extra spellings for relation values, e.g. `CloseFriend = "close_friend"`.
    pub relation_values: BTreeMap<String, Relation>,
    /// Relation values that are present in the source but not analysed.
    pub ignore_relations: Vec<String>,
}

impl Default for RelationshipSchema {
    fn default() -> Self {
        RelationshipSchema {
            reporter_column: "reporter".into(),
            target_column: "target".into(),
            relation_column: "relation".into(),
            survey_index_column: Some("survey_index".into()),
            survey_date_column: None,
            survey_date_format: TimestampFormat::Iso8601,
            survey_dates: Vec::new(),
            relation_values: BTreeMap::new(),
            ignore_relations: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedReports {
    pub reports: Vec<RelationshipReport>,
    pub dropped_external: usize,
    pub ignored_relations: usize,
}

/// Reads relationship reports for a study with `surveys` waves.
pub fn parse_relationships(
    source: impl Read,
    schema: &RelationshipSchema,
    roster: &Roster,
    surveys: u32,
) -> Result<ParsedReports, IngestError> {
    if surveys == 0 {
        return Err(IngestError::NoSurveys);
    }
    let survey_dates = schema
        .survey_dates
        .iter()
        .map(|d| {
            schema
                .survey_date_format
                .parse(d)
                .ok_or_else(|| IngestError::Adapter(format!("bad survey date `{d}`")))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader.headers()?.clone();
    let reporter_col = column_index(&headers, &schema.reporter_column)?;
    let target_col = column_index(&headers, &schema.target_column)?;
    let relation_col = column_index(&headers, &schema.relation_column)?;
    enum Wave {
        Index(usize),
        Date(usize),
    }
    let wave = match (&schema.survey_index_column, &schema.survey_date_column) {
        (Some(c), _) => Wave::Index(column_index(&headers, c)?),
        (None, Some(c)) if !survey_dates.is_empty() => Wave::Date(column_index(&headers, c)?),
        _ => {
            return Err(IngestError::Adapter(
                "need a survey index column or a survey date column with survey dates".into(),
            ))
        }
    };

    let mut out = ParsedReports::default();
    for record in reader.records() {
        let record = record?;
        let line = line_of(&record);
        let field = |col: usize| -> Result<&str, IngestError> {
            record.get(col).ok_or_else(|| IngestError::Malformed {
                line,
                message: format!("expected at least {} fields, found {}", col + 1, record.len()),
            })
        };
        let raw_relation = field(relation_col)?;
        if schema.ignore_relations.iter().any(|r| r == raw_relation) {
            out.ignored_relations += 1;
            continue;
        }
        let relation = schema
            .relation_values
            .get(raw_relation)
            .copied()
            .or_else(|| raw_relation.parse().ok())
            .ok_or_else(|| IngestError::UnknownRelation {
                line,
                value: raw_relation.to_string(),
            })?;
        let survey_index = match wave {
            Wave::Index(col) => {
                let raw = field(col)?;
                raw.parse::<u32>().map_err(|_| IngestError::Malformed {
                    line,
                    message: format!("survey index `{raw}` is not a positive integer"),
                })?
            }
            Wave::Date(col) => {
                let raw = field(col)?;
                let t = schema.survey_date_format.parse(raw).ok_or_else(|| {
                    IngestError::Timestamp {
                        line,
                        value: raw.to_string(),
                    }
                })?;
                nearest_wave(&survey_dates, t)
            }
        };
        if survey_index == 0 || survey_index > surveys {
            return Err(IngestError::Malformed {
                line,
                message: format!("survey index {survey_index} outside 1..={surveys}"),
            });
        }
        let reporter = field(reporter_col)?.to_string();
        let target = field(target_col)?.to_string();
        if is_missing(&reporter)
            || is_missing(&target)
            || !roster.contains(&reporter)
            || !roster.contains(&target)
        {
            out.dropped_external += 1;
            continue;
        }
        if reporter == target {
            return Err(IngestError::Malformed {
                line,
                message: format!("`{reporter}` reports a relationship with themselves"),
            });
        }
        out.reports.push(RelationshipReport {
            reporter,
            target,
            relation,
            survey_index,
        });
    }
    Ok(out)
}

fn nearest_wave(dates: &[i64], t: i64) -> u32 {
    let (k, _) = dates
        .iter()
        .enumerate()
        .min_by_key(|(_, &d)| (d - t).unsigned_abs())
        .expect("survey dates are non-empty");
    k as u32 + 1
}

/// Minimum number of surveys, out of `surveys`, that must carry a report:
/// at least half, rounded up.
pub fn qualifying_threshold(surveys: u32) -> u32 {
    surveys.div_ceil(2)
}

/// A pair whose strongest qualifying relation is not backed by the weaker
/// relations it normally implies.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HierarchyViolation {
    pub src: String,
    pub dst: String,
    pub label: RelationshipLabel,
    pub missing: Vec<Relation>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCounts {
    pub none: usize,
    pub fb_only: usize,
    pub socialize: usize,
    pub close_friend: usize,
}

impl LabelCounts {
    pub fn add(&mut self, label: RelationshipLabel) {
        *self.slot(label) += 1;
    }

    fn slot(&mut self, label: RelationshipLabel) -> &mut usize {
        match label {
            RelationshipLabel::None => &mut self.none,
            RelationshipLabel::FbOnly => &mut self.fb_only,
            RelationshipLabel::Socialize => &mut self.socialize,
            RelationshipLabel::CloseFriend => &mut self.close_friend,
        }
    }

    pub fn get(&self, label: RelationshipLabel) -> usize {
        match label {
            RelationshipLabel::None => self.none,
            RelationshipLabel::FbOnly => self.fb_only,
            RelationshipLabel::Socialize => self.socialize,
            RelationshipLabel::CloseFriend => self.close_friend,
        }
    }

    pub fn total(&self) -> usize {
        self.none + self.fb_only + self.socialize + self.close_friend
    }
}

/// One label per ordered pair of distinct participants.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMap {
    roster: Arc<Roster>,
    labels: Vec<RelationshipLabel>,
    violations: Vec<HierarchyViolation>,
}

impl LabelMap {
    /// All pairs labelled `None`.
    pub fn unlabelled(roster: Arc<Roster>) -> Self {
        let n = roster.len();
        LabelMap {
            roster,
            labels: vec![RelationshipLabel::None; n * n],
            violations: Vec::new(),
        }
    }

    pub fn roster(&self) -> &Arc<Roster> {
        &self.roster
    }

    pub fn get(&self, i: usize, j: usize) -> RelationshipLabel {
        self.labels[i * self.roster.len() + j]
    }

    pub fn set(&mut self, i: usize, j: usize, label: RelationshipLabel) {
        assert_ne!(i, j, "self pairs carry no label");
        let n = self.roster.len();
        self.labels[i * n + j] = label;
    }

    pub fn hierarchy_violations(&self) -> &[HierarchyViolation] {
        &self.violations
    }

    /// Ordered pairs `(i, j)`, `i != j`, with their labels.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, RelationshipLabel)> + '_ {
        let n = self.roster.len();
        (0..n)
            .flat_map(move |i| (0..n).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .map(|(i, j)| (i, j, self.get(i, j)))
    }

    /// Counts over every ordered pair; sums to `N (N − 1)`.
    pub fn counts(&self) -> LabelCounts {
        let mut c = LabelCounts::default();
        for (_, _, label) in self.iter() {
            c.add(label);
        }
        c
    }

    /// Counts over ordered pairs tied (either direction) in `layer`.
    pub fn counts_on(&self, layer: &Layer) -> LabelCounts {
        let mut c = LabelCounts::default();
        for (i, j, label) in self.iter() {
            if layer.connected(i, j) {
                c.add(label);
            }
        }
        c
    }

    /// `src,dst,label` for every ordered pair.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("src,dst,label\n");
        for (i, j, label) in self.iter() {
            out.push_str(&format!(
                "{},{},{}\n",
                self.roster.id(i),
                self.roster.id(j),
                label
            ));
        }
        out
    }
}

/// Directed labels from survey reports.
///
/// `i` holds relation `r` towards `j` when `i` reported `r` about `j` in at
/// least [`qualifying_threshold`] distinct surveys. The label is the
/// strongest qualifying relation. Labels are not symmetrized.
pub fn label_relationships(
    reports: &[RelationshipReport],
    surveys: u32,
    roster: &Arc<Roster>,
) -> Result<LabelMap, IngestError> {
    if surveys == 0 {
        return Err(IngestError::NoSurveys);
    }
    let mut waves: BTreeMap<(usize, usize, Relation), BTreeSet<u32>> = BTreeMap::new();
    for report in reports {
        if report.survey_index == 0 || report.survey_index > surveys {
            return Err(IngestError::SurveyIndex {
                index: report.survey_index,
                surveys,
            });
        }
        let i = roster
            .index_of(&report.reporter)
            .ok_or_else(|| IngestError::UnknownParticipant(report.reporter.clone()))?;
        let j = roster
            .index_of(&report.target)
            .ok_or_else(|| IngestError::UnknownParticipant(report.target.clone()))?;
        if i == j {
            return Err(IngestError::SelfReport(report.reporter.clone()));
        }
        waves
            .entry((i, j, report.relation))
            .or_default()
            .insert(report.survey_index);
    }

    let threshold = qualifying_threshold(surveys) as usize;
    let mut qualifying: BTreeMap<(usize, usize), BTreeSet<Relation>> = BTreeMap::new();
    for ((i, j, relation), seen) in waves {
        if seen.len() >= threshold {
            qualifying.entry((i, j)).or_default().insert(relation);
        }
    }

    let mut map = LabelMap::unlabelled(Arc::clone(roster));
    for ((i, j), held) in qualifying {
        let label = held
            .iter()
            .map(|&r| RelationshipLabel::for_relation(r))
            .max()
            .expect("non-empty");
        let implied: &[Relation] = match label {
            RelationshipLabel::CloseFriend => {
                &[Relation::SocializeTwiceWeek, Relation::FacebookAllTagged]
            }
            RelationshipLabel::Socialize => &[Relation::FacebookAllTagged],
            _ => &[],
        };
        let missing: Vec<Relation> = implied
            .iter()
            .copied()
            .filter(|r| !held.contains(r))
            .collect();
        if !missing.is_empty() {
            map.violations.push(HierarchyViolation {
                src: roster.id(i).to_string(),
                dst: roster.id(j).to_string(),
                label,
                missing,
            });
        }
        map.set(i, j, label);
    }
    Ok(map)
}
