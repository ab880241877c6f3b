use std::fmt;
use std::io::Read;
use std::str::FromStr;
use std::sync::Arc;

use chrono::{DateTime, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use super::{column_index, is_missing, line_of, IngestError};
use crate::graph::{Layer, MultiplexGraph, Roster};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    Call,
    Sms,
    Proximity,
}

impl Channel {
    pub const ALL: [Channel; 3] = [Channel::Call, Channel::Sms, Channel::Proximity];

    /// Layer name used in the multiplex.
    pub fn layer_name(self) -> &'static str {
        match self {
            Channel::Call => "calls",
            Channel::Sms => "sms",
            Channel::Proximity => "proximity",
        }
    }

    /// Calls and messages have a sender; co-location does not.
    pub fn directed(self) -> bool {
        !matches!(self, Channel::Proximity)
    }
}

impl FromStr for Channel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "call" | "calls" | "voice" => Ok(Channel::Call),
            "sms" | "text" | "message" => Ok(Channel::Sms),
            "proximity" | "bluetooth" | "colocation" => Ok(Channel::Proximity),
            other => Err(other.to_string()),
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Channel::Call => "call",
            Channel::Sms => "sms",
            Channel::Proximity => "proximity",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionEvent {
    pub src: String,
    pub dst: String,
    pub channel: Channel,
    /// UTC seconds since the epoch.
    pub timestamp: i64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimestampFormat {
    /// RFC 3339 / ISO 8601; offset-free values and bare dates are read as UTC.
    #[default]
    Iso8601,
    UnixSeconds,
    /// chrono `strftime` pattern, read as UTC.
    Pattern(String),
}

impl TimestampFormat {
    pub fn parse(&self, value: &str) -> Option<i64> {
        let value = value.trim();
        match self {
            TimestampFormat::Iso8601 => parse_iso8601(value),
            TimestampFormat::UnixSeconds => value
                .parse::<i64>()
                .ok()
                .or_else(|| value.parse::<f64>().ok().map(|v| v.floor() as i64)),
            TimestampFormat::Pattern(p) => NaiveDateTime::parse_from_str(value, p)
                .ok()
                .or_else(|| {
                    NaiveDate::parse_from_str(value, p)
                        .ok()
                        .and_then(|d| d.and_hms_opt(0, 0, 0))
                })
                .map(|t| t.and_utc().timestamp()),
        }
    }
}

fn parse_iso8601(value: &str) -> Option<i64> {
    if let Ok(t) = DateTime::parse_from_rfc3339(value) {
        return Some(t.timestamp());
    }
    for pattern in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(value, pattern) {
            return Some(t.and_utc().timestamp());
        }
    }
    NaiveDate::parse_from_str(value, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .map(|t| t.and_utc().timestamp())
}

/// Half-open `[start, end)` interval of accepted event times.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudyWindow {
    pub start: String,
    pub end: String,
}

impl StudyWindow {
    pub fn bounds(&self) -> Result<(i64, i64), IngestError> {
        let start = parse_iso8601(&self.start)
            .ok_or_else(|| IngestError::Window(format!("bad start `{}`", self.start)))?;
        let end = parse_iso8601(&self.end)
            .ok_or_else(|| IngestError::Window(format!("bad end `{}`", self.end)))?;
        if start >= end {
            return Err(IngestError::Window(format!(
                "start `{}` is not before end `{}`",
                self.start, self.end
            )));
        }
        Ok((start, end))
    }
}

/// Column mapping for an interaction log. The defaults describe the
/// canonical `events.csv` (`src,dst,channel,timestamp`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EventSchema {
    pub src_column: String,
    pub dst_column: String,
    /// Column holding the channel; ignored when `channel` fixes it.
    pub channel_column: Option<String>,
    /// Channel shared by every row of a single-channel log.
    pub channel: Option<Channel>,
    pub timestamp_column: String,
    pub timestamp_format: TimestampFormat,
    /// Column whose truthy values mark the row as received by `src`, so the
    /// arc runs `dst -> src`.
    pub incoming_column: Option<String>,
}

impl Default for EventSchema {
    fn default() -> Self {
        EventSchema {
            src_column: "src".into(),
            dst_column: "dst".into(),
            channel_column: Some("channel".into()),
            channel: None,
            timestamp_column: "timestamp".into(),
            timestamp_format: TimestampFormat::Iso8601,
            incoming_column: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedEvents {
    pub events: Vec<InteractionEvent>,
    /// Rows with a participant outside the roster (external contacts).
    pub dropped_external: usize,
    pub dropped_outside_window: usize,
}

fn truthy(value: &str) -> bool {
    matches!(
        value.trim().to_ascii_lowercase().as_str(),
        "1" | "true" | "t" | "yes" | "y" | "incoming"
    )
}

/// Reads and validates an interaction log.
pub fn parse_events(
    source: impl Read,
    schema: &EventSchema,
    roster: &Roster,
    window: Option<&StudyWindow>,
) -> Result<ParsedEvents, IngestError> {
    let bounds = window.map(StudyWindow::bounds).transpose()?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader.headers()?.clone();
    let src_col = column_index(&headers, &schema.src_column)?;
    let dst_col = column_index(&headers, &schema.dst_column)?;
    let ts_col = column_index(&headers, &schema.timestamp_column)?;
    let channel_col = match (&schema.channel, &schema.channel_column) {
        (Some(_), _) => None,
        (None, Some(name)) => Some(column_index(&headers, name)?),
        (None, None) => {
            return Err(IngestError::MissingColumn(
                "channel (no channel column or fixed channel configured)".into(),
            ))
        }
    };
    let incoming_col = schema
        .incoming_column
        .as_deref()
        .map(|c| column_index(&headers, c))
        .transpose()?;

    let mut out = ParsedEvents::default();
    for record in reader.records() {
        let record = record?;
        let line = line_of(&record);
        let field = |col: usize| -> Result<&str, IngestError> {
            record.get(col).ok_or_else(|| IngestError::Malformed {
                line,
                message: format!("expected at least {} fields, found {}", col + 1, record.len()),
            })
        };
        let channel = match (schema.channel, channel_col) {
            (Some(c), _) => c,
            (None, Some(col)) => {
                let raw = field(col)?;
                raw.parse::<Channel>()
                    .map_err(|_| IngestError::UnknownChannel {
                        line,
                        value: raw.to_string(),
                    })?
            }
            (None, None) => unreachable!("checked above"),
        };
        let raw_ts = field(ts_col)?;
        let timestamp = schema
            .timestamp_format
            .parse(raw_ts)
            .ok_or_else(|| IngestError::Timestamp {
                line,
                value: raw_ts.to_string(),
            })?;
        let mut src = field(src_col)?.to_string();
        let mut dst = field(dst_col)?.to_string();
        if is_missing(&src) || is_missing(&dst) || !roster.contains(&src) || !roster.contains(&dst) {
            out.dropped_external += 1;
            continue;
        }
        if src == dst {
            return Err(IngestError::Malformed {
                line,
                message: format!("participant `{src}` interacts with themselves"),
            });
        }
        if let Some((start, end)) = bounds {
            if timestamp < start || timestamp >= end {
                out.dropped_outside_window += 1;
                continue;
            }
        }
        if let Some(col) = incoming_col {
            if truthy(field(col)?) {
                std::mem::swap(&mut src, &mut dst);
            }
        }
        out.events.push(InteractionEvent {
            src,
            dst,
            channel,
            timestamp,
        });
    }
    Ok(out)
}

/// One layer from the events of `channel`; other channels are skipped.
///
/// Calls and SMS give a directed arc `i -> j` when at least one event runs
/// that way. Proximity gives an undirected edge for an event in either
/// direction. Event counts are not used as weights.
pub fn build_layer(
    events: &[InteractionEvent],
    channel: Channel,
    roster: &Arc<Roster>,
) -> Result<Layer, IngestError> {
    let mut layer = Layer::empty(channel.layer_name(), channel.directed(), Arc::clone(roster));
    for event in events.iter().filter(|e| e.channel == channel) {
        let i = roster
            .index_of(&event.src)
            .ok_or_else(|| IngestError::UnknownParticipant(event.src.clone()))?;
        let j = roster
            .index_of(&event.dst)
            .ok_or_else(|| IngestError::UnknownParticipant(event.dst.clone()))?;
        layer.insert(i, j)?;
    }
    Ok(layer)
}

/// Multiplex with the calls, sms and proximity layers, in that order.
pub fn build_multiplex(
    events: &[InteractionEvent],
    roster: &Arc<Roster>,
) -> Result<MultiplexGraph, IngestError> {
    let layers = Channel::ALL
        .iter()
        .map(|&c| build_layer(events, c, roster))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MultiplexGraph::new(Arc::clone(roster), layers)?)
}
