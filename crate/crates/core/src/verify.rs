//! Comparison of an analysis of the MIT Social Evolution data with the
//! published figures.

use serde::{Deserialize, Serialize};

use crate::ingest::RelationshipLabel;
use crate::pipeline::AnalysisReport;

/// Tolerance for the SMS-within-calls overlap fraction.
pub const OVERLAP_TOLERANCE: f64 = 0.01;
/// Tolerance for label probabilities.
pub const PMF_TOLERANCE: f64 = 0.05;
/// Tolerance for graph and rank correlations.
pub const CORRELATION_TOLERANCE: f64 = 0.05;

/// `(layer, non-isolated nodes, nonzero adjacency entries)`.
pub const LAYER_TABLE: [(&str, usize, usize); 3] = [
    ("calls", 69, 401),
    ("sms", 33, 70),
    ("proximity", 74, 4526),
];

/// Directed label counts over pairs tied in the union of all layers.
pub const LABEL_COUNTS: [(RelationshipLabel, usize); 4] = [
    (RelationshipLabel::None, 2179),
    (RelationshipLabel::FbOnly, 1299),
    (RelationshipLabel::Socialize, 586),
    (RelationshipLabel::CloseFriend, 462),
];

pub const SMS_WITHIN_CALLS: f64 = 0.92;
pub const INTERSECTION_ALL: &str = "intersection(calls,sms,proximity)";
pub const INTERSECTION_ALL_CLOSE_FRIEND: f64 = 0.75;

/// Graph correlation between multiplex weight and category similarity.
pub const GRAPH_CORRELATIONS: [(&str, f64); 4] = [
    ("political", 0.6),
    ("music", 0.49),
    ("health", 0.6),
    ("situational", 0.56),
];

/// Degree rank correlation per category.
pub const DEGREE_RANK: [(&str, f64); 4] = [
    ("political", 0.78),
    ("health", 0.79),
    ("music", 0.81),
    ("situational", 0.73),
];

pub const CALLS_AND_PROXIMITY: &str = "intersection(calls,proximity)";
pub const CALLS_AND_PROXIMITY_PMF: [(RelationshipLabel, f64); 3] = [
    (RelationshipLabel::CloseFriend, 0.5),
    (RelationshipLabel::Socialize, 0.23),
    (RelationshipLabel::FbOnly, 0.17),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub expected: String,
    pub observed: String,
    pub passed: bool,
    /// Supplementary checks do not decide the overall verdict.
    pub primary: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub checks: Vec<Check>,
}

impl Verification {
    pub fn passed(&self) -> bool {
        self.checks.iter().filter(|c| c.primary).all(|c| c.passed)
    }

    /// One `PASS`/`FAIL` line per check.
    pub fn lines(&self) -> Vec<String> {
        self.checks
            .iter()
            .map(|c| {
                let mut line = format!(
                    "{} {}{}: expected {}, observed {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    if c.primary { "" } else { " (supplementary)" },
                    c.expected,
                    c.observed
                );
                if let Some(note) = &c.note {
                    line.push_str(&format!(" [{note}]"));
                }
                line
            })
            .collect()
    }
}

struct Checks(Vec<Check>);

impl Checks {
    fn exact(&mut self, name: String, expected: usize, observed: Option<usize>) {
        self.0.push(Check {
            name,
            expected: expected.to_string(),
            observed: observed.map_or("missing".into(), |v| v.to_string()),
            passed: observed == Some(expected),
            primary: true,
            note: None,
        });
    }

    fn near(&mut self, name: String, expected: f64, tol: f64, observed: Option<f64>, primary: bool) -> &mut Check {
        self.0.push(Check {
            name,
            expected: format!("{expected} ± {tol}"),
            observed: observed.map_or("undefined".into(), |v| format!("{v:.4}")),
            passed: observed.is_some_and(|v| (v - expected).abs() <= tol),
            primary,
            note: None,
        });
        self.0.last_mut().expect("just pushed")
    }

    fn holds(&mut self, name: &str, expected: &str, observed: Option<f64>, test: impl Fn(f64) -> bool) {
        self.0.push(Check {
            name: name.into(),
            expected: expected.into(),
            observed: observed.map_or("undefined".into(), |v| format!("{v:.4}")),
            passed: observed.is_some_and(test),
            primary: false,
            note: None,
        });
    }
}

/// Checks a report produced from the MIT Social Evolution data.
pub fn verify_report(report: &AnalysisReport) -> Verification {
    let mut c = Checks(Vec::new());
    for (layer, nodes, edges) in LAYER_TABLE {
        let stats = report.layer(layer);
        c.exact(format!("layers.{layer}.nodes"), nodes, stats.map(|s| s.nodes));
        c.exact(format!("layers.{layer}.edges"), edges, stats.map(|s| s.edges));
    }
    for (label, count) in LABEL_COUNTS {
        c.exact(
            format!("relationships.{label}"),
            count,
            Some(report.label_counts_on_union.get(label)),
        );
    }
    c.near(
        "overlap.sms_within_calls".into(),
        SMS_WITHIN_CALLS,
        OVERLAP_TOLERANCE,
        report.overlap("sms", "calls").and_then(|o| o.fraction),
        true,
    );
    let pmf = report.pmf(INTERSECTION_ALL);
    let check = c.near(
        format!("pmf.intersection_all.{}", RelationshipLabel::CloseFriend),
        INTERSECTION_ALL_CLOSE_FRIEND,
        PMF_TOLERANCE,
        pmf.and_then(|p| p.probability(RelationshipLabel::CloseFriend)),
        true,
    );
    if pmf.is_none() {
        check.note = Some(format!("aggregation {INTERSECTION_ALL} not configured"));
    }
    for (category, expected) in GRAPH_CORRELATIONS {
        let check = c.near(
            format!("graph_correlation.{category}"),
            expected,
            CORRELATION_TOLERANCE,
            report.category(category).and_then(|r| r.graph_correlation),
            true,
        );
        check.note = Some("similarity masked to multiplex neighbours unless masking = \"none\"".into());
    }
    for (category, expected) in DEGREE_RANK {
        let check = c.near(
            format!("degree_rank.{category}"),
            expected,
            CORRELATION_TOLERANCE,
            report.category(category).and_then(|r| r.spearman_rho),
            true,
        );
        check.note = Some("similarity degree masked to multiplex neighbours unless masking = \"none\"".into());
    }

    let pmf = report.pmf(CALLS_AND_PROXIMITY);
    for (label, expected) in CALLS_AND_PROXIMITY_PMF {
        c.near(
            format!("pmf.calls_and_proximity.{label}"),
            expected,
            PMF_TOLERANCE,
            pmf.and_then(|p| p.probability(label)),
            false,
        );
    }
    c.holds(
        "diversity.situational.median_below_zero",
        "< 0",
        report
            .category("situational")
            .and_then(|r| r.delta.as_ref())
            .map(|d| d.summary.median),
        |m| m < 0.0,
    );
    c.holds(
        "diversity.political.fraction_positive",
        "> 0.5",
        report
            .category("political")
            .and_then(|r| r.delta.as_ref())
            .map(|d| d.fraction_positive),
        |f| f > 0.5,
    );
    Verification { checks: c.0 }
}
