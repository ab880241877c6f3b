//! Seeded synthetic datasets in the canonical file layout.
//!
//! Participants fall into latent taste clusters, so attribute vectors within
//! a cluster are alike; fixed facts (`actual` attributes) are drawn
//! independently. Each layer's edge probability is a logistic function
//! of the standardized mean profile similarity of the pair, tilted by a
//! per-layer homophily strength; at strength 0 edges ignore attributes.
//! Layers are nested (sms inside calls inside proximity), and relationship
//! labels grow more likely with the number of shared layers.
//!
//! By default only proximity is tilted and the inner layers inherit the
//! preference through nesting. Tilting every layer compounds, and the pairs
//! tied on all three layers (distance 0) soon join into one component that
//! puts the whole population at distance 0.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use chrono::DateTime;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Roster;
use crate::ingest::{
    write_roster, RelationshipLabel, EVENTS_FILE, RELATIONSHIPS_FILE, ROSTER_FILE, SURVEYS_FILE,
};
use crate::profiles::{Registry, SummaryMode};
use crate::rng::{stream_rng, streams};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("n_nodes must be at least 4, got {0}")]
    TooFewNodes(usize),
    #[error("`{name}` must lie in [0, 1], got {value}")]
    Probability { name: String, value: f64 },
    #[error("`{name}` must be finite, got {value}")]
    NotFinite { name: String, value: f64 },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    /// Edge probability for a pair of average similarity. For calls and sms
    /// this is conditional on the pair being tied in the enclosing layer.
    pub base_probability: f64,
    /// Log-odds added per standard deviation of pair similarity.
    pub homophily: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n_nodes: usize,
    pub seed: u64,
    pub surveys: u32,
    /// Latent taste clusters shaping every category.
    pub clusters: usize,
    /// Per-participant spread around the cluster prototype, as a fraction of
    /// each attribute's range.
    pub attribute_noise: f64,
    /// Chance that a survey answer is missing.
    pub missing_answer: f64,
    /// Chance that a repeated answer drifts by one unit.
    pub answer_drift: f64,
    pub proximity: LayerSpec,
    pub calls: LayerSpec,
    pub sms: LayerSpec,
    /// Label distribution `[none, fb_only, socialize, close_friend]` for
    /// pairs sharing 0, 1, 2 and 3 layers.
    pub label_probabilities: [[f64; 4]; 4],
    /// Chance that an unlabelled pair in the same year or sector is a
    /// Facebook friend anyway.
    pub fb_bias: f64,
    /// Chance that `j -> i` copies the label of `i -> j`.
    pub reciprocity: f64,
    /// Chance that a true relation goes unreported in a wave.
    pub report_miss: f64,
    /// Chance per wave of a spurious Facebook report for an unrelated pair.
    pub report_false: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_nodes: 60,
            seed: 1,
            surveys: 6,
            clusters: 4,
            attribute_noise: 0.15,
            missing_answer: 0.05,
            answer_drift: 0.1,
            proximity: LayerSpec {
                base_probability: 0.2,
                homophily: 1.5,
            },
            calls: LayerSpec {
                base_probability: 0.25,
                homophily: 0.0,
            },
            sms: LayerSpec {
                base_probability: 0.1,
                homophily: 0.0,
            },
            label_probabilities: [
                [0.97, 0.025, 0.004, 0.001],
                [0.55, 0.25, 0.12, 0.08],
                [0.2, 0.2, 0.25, 0.35],
                [0.05, 0.1, 0.15, 0.7],
            ],
            fb_bias: 0.6,
            reciprocity: 0.7,
            report_miss: 0.15,
            report_false: 0.01,
        }
    }
}

impl SyntheticSpec {
    /// Sets the proximity tilt; calls and sms keep their own.
    pub fn with_homophily(mut self, strength: f64) -> Self {
        self.proximity.homophily = strength;
        self
    }

    pub fn from_toml(text: &str) -> Result<Self, SynthError> {
        let spec: SyntheticSpec =
            toml::from_str(text).map_err(|e| SynthError::Invalid(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.n_nodes < 4 {
            return Err(SynthError::TooFewNodes(self.n_nodes));
        }
        if self.surveys == 0 {
            return Err(SynthError::Invalid("surveys must be positive".into()));
        }
        if self.clusters == 0 {
            return Err(SynthError::Invalid("clusters must be positive".into()));
        }
        let mut probs = vec![
            ("attribute_noise", self.attribute_noise),
            ("missing_answer", self.missing_answer),
            ("answer_drift", self.answer_drift),
            ("proximity.base_probability", self.proximity.base_probability),
            ("calls.base_probability", self.calls.base_probability),
            ("sms.base_probability", self.sms.base_probability),
            ("fb_bias", self.fb_bias),
            ("reciprocity", self.reciprocity),
            ("report_miss", self.report_miss),
            ("report_false", self.report_false),
        ];
        for row in &self.label_probabilities {
            probs.extend(row.iter().map(|&p| ("label_probabilities", p)));
        }
        for (name, value) in probs {
            if !(0.0..=1.0).contains(&value) {
                return Err(SynthError::Probability {
                    name: name.into(),
                    value,
                });
            }
        }
        for (name, value) in [
            ("proximity.homophily", self.proximity.homophily),
            ("calls.homophily", self.calls.homophily),
            ("sms.homophily", self.sms.homophily),
        ] {
            if !value.is_finite() {
                return Err(SynthError::NotFinite {
                    name: name.into(),
                    value,
                });
            }
        }
        for (m, row) in self.label_probabilities.iter().enumerate() {
            if (row.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                return Err(SynthError::Invalid(format!(
                    "label_probabilities[{m}] must sum to 1"
                )));
            }
        }
        Ok(())
    }
}

/// Canonical file contents of a generated dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub roster: Roster,
    pub events_csv: String,
    pub relationships_csv: String,
    pub surveys_csv: String,
}

impl SyntheticDataset {
    /// Writes the four canonical files into `dir` (created if needed).
    pub fn write(&self, dir: &Path) -> Result<(), SynthError> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(ROSTER_FILE), write_roster(&self.roster))?;
        fs::write(dir.join(EVENTS_FILE), &self.events_csv)?;
        fs::write(dir.join(RELATIONSHIPS_FILE), &self.relationships_csv)?;
        fs::write(dir.join(SURVEYS_FILE), &self.surveys_csv)?;
        Ok(())
    }
}

/// First event time, 2008-09-01T00:00:00Z, and the span of the event window.
const WINDOW_START: i64 = 1_220_227_200;
const WINDOW_SECONDS: i64 = 270 * 86_400;

pub fn generate(spec: &SyntheticSpec, registry: &Registry) -> Result<SyntheticDataset, SynthError> {
    spec.validate()?;
    let n = spec.n_nodes;
    let roster = Roster::numbered(n);

    let mut rng = stream_rng(spec.seed, streams::ATTRIBUTES);
    let base = base_attributes(spec, registry, &mut rng);
    let surveys_csv = survey_rows(spec, registry, &roster, &base, &mut rng);

    let z = standardized_similarity(registry, &base, n);
    let layers = draw_layers(spec, &z, n, &mut stream_rng(spec.seed, streams::LAYERS));
    let situational = registry
        .category_names()
        .position(|c| c == "situational");
    let same_context = |i: usize, j: usize| match situational {
        Some(c) => base[i][c].iter().zip(&base[j][c]).any(|(a, b)| a == b),
        None => false,
    };
    let labels = draw_labels(
        spec,
        &layers,
        n,
        same_context,
        &mut stream_rng(spec.seed, streams::RELATIONSHIPS),
    );
    let relationships_csv = report_rows(
        spec,
        &roster,
        &labels,
        &mut stream_rng(spec.seed, streams::REPORTS),
    );
    let events_csv = event_rows(
        &roster,
        &layers,
        &mut stream_rng(spec.seed, streams::TIMESTAMPS),
    );
    Ok(SyntheticDataset {
        roster,
        events_csv,
        relationships_csv,
        surveys_csv,
    })
}

/// `base[participant][category][attribute]`, integer values within range.
fn base_attributes(spec: &SyntheticSpec, registry: &Registry, rng: &mut ChaCha8Rng) -> Vec<Vec<Vec<f64>>> {
    let prototypes: Vec<Vec<Vec<f64>>> = (0..spec.clusters)
        .map(|_| {
            registry
                .categories
                .iter()
                .map(|c| {
                    c.attributes
                        .iter()
                        .map(|a| rng.gen_range(a.min..=a.max))
                        .collect()
                })
                .collect()
        })
        .collect();
    (0..spec.n_nodes)
        .map(|_| {
            let cluster = &prototypes[rng.gen_range(0..spec.clusters)];
            registry
                .categories
                .iter()
                .zip(cluster)
                .map(|(c, proto)| {
                    c.attributes
                        .iter()
                        .zip(proto)
                        .map(|(a, &p)| {
                            // fixed facts such as year or residence do not follow taste
                            if a.summary == SummaryMode::Actual {
                                return rng.gen_range(a.min..=a.max).round();
                            }
                            let spread = spec.attribute_noise * (a.max - a.min);
                            let v = p + spread * rng.gen_range(-1.0..=1.0);
                            v.round().clamp(a.min, a.max)
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

fn survey_rows(
    spec: &SyntheticSpec,
    registry: &Registry,
    roster: &Roster,
    base: &[Vec<Vec<f64>>],
    rng: &mut ChaCha8Rng,
) -> String {
    let mut out = String::from("participant,attribute,category,survey_index,value\n");
    for (i, cats) in base.iter().enumerate() {
        for (c, values) in registry.categories.iter().zip(cats) {
            for (a, &v) in c.attributes.iter().zip(values) {
                for wave in 1..=spec.surveys {
                    if rng.gen_bool(spec.missing_answer) {
                        continue;
                    }
                    let mut answer = v;
                    if a.summary != SummaryMode::Actual && rng.gen_bool(spec.answer_drift) {
                        let step = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                        answer = (v + step).clamp(a.min, a.max);
                    }
                    let _ = writeln!(out, "{},{},{},{wave},{answer}", roster.id(i), a.name, c.name);
                }
            }
        }
    }
    out
}

/// Mean cosine similarity across categories, z-scored over unordered pairs.
fn standardized_similarity(registry: &Registry, base: &[Vec<Vec<f64>>], n: usize) -> Vec<f64> {
    let k = registry.categories.len() as f64;
    let mut s = vec![0.0; n * n];
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let mean = base[i]
                .iter()
                .zip(&base[j])
                .map(|(u, v)| cosine(u, v))
                .sum::<f64>()
                / k;
            s[i * n + j] = mean;
            s[j * n + i] = mean;
            pairs.push(mean);
        }
    }
    let m = pairs.iter().sum::<f64>() / pairs.len() as f64;
    let sd = (pairs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / pairs.len() as f64).sqrt();
    let sd = if sd > 0.0 { sd } else { 1.0 };
    s.iter().map(|x| (x - m) / sd).collect()
}

fn cosine(u: &[f64], v: &[f64]) -> f64 {
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu: f64 = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        0.0
    } else {
        dot / (nu * nv)
    }
}

fn tilted(layer: &LayerSpec, z: f64) -> f64 {
    let p = layer.base_probability;
    if p <= 0.0 || p >= 1.0 {
        return p;
    }
    let logit = (p / (1.0 - p)).ln() + layer.homophily * z;
    1.0 / (1.0 + (-logit).exp())
}

/// Arcs of the synthetic multiplex.
struct Layers {
    /// Undirected proximity edges, `i < j`.
    proximity: Vec<(usize, usize)>,
    calls: Vec<(usize, usize)>,
    sms: Vec<(usize, usize)>,
    /// Number of layers tying each unordered pair, indexed `i * n + j`.
    count: Vec<u8>,
}

fn draw_layers(spec: &SyntheticSpec, z: &[f64], n: usize, rng: &mut ChaCha8Rng) -> Layers {
    let mut layers = Layers {
        proximity: Vec::new(),
        calls: Vec::new(),
        sms: Vec::new(),
        count: vec![0; n * n],
    };
    let orient = |i: usize, j: usize, rng: &mut ChaCha8Rng, out: &mut Vec<(usize, usize)>| {
        match rng.gen_range(0..3) {
            0 => out.push((i, j)),
            1 => out.push((j, i)),
            _ => {
                out.push((i, j));
                out.push((j, i));
            }
        }
    };
    for i in 0..n {
        for j in i + 1..n {
            let zij = z[i * n + j];
            let mut m = 0;
            if rng.gen_bool(tilted(&spec.proximity, zij)) {
                layers.proximity.push((i, j));
                m += 1;
                if rng.gen_bool(tilted(&spec.calls, zij)) {
                    orient(i, j, rng, &mut layers.calls);
                    m += 1;
                    if rng.gen_bool(tilted(&spec.sms, zij)) {
                        orient(i, j, rng, &mut layers.sms);
                        m += 1;
                    }
                }
            }
            layers.count[i * n + j] = m;
            layers.count[j * n + i] = m;
        }
    }
    layers
}

fn draw_label(
    spec: &SyntheticSpec,
    shared: u8,
    same_context: bool,
    rng: &mut ChaCha8Rng,
) -> RelationshipLabel {
    let probs = &spec.label_probabilities[shared as usize];
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut label = RelationshipLabel::CloseFriend;
    for (k, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            label = RelationshipLabel::ALL[k];
            break;
        }
    }
    if label == RelationshipLabel::None && same_context && rng.gen_bool(spec.fb_bias) {
        RelationshipLabel::FbOnly
    } else {
        label
    }
}

fn draw_labels(
    spec: &SyntheticSpec,
    layers: &Layers,
    n: usize,
    same_context: impl Fn(usize, usize) -> bool,
    rng: &mut ChaCha8Rng,
) -> Vec<RelationshipLabel> {
    let mut labels = vec![RelationshipLabel::None; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let shared = layers.count[i * n + j];
            let ctx = same_context(i, j);
            let forward = draw_label(spec, shared, ctx, rng);
            let backward = if rng.gen_bool(spec.reciprocity) {
                forward
            } else {
                draw_label(spec, shared, ctx, rng)
            };
            labels[i * n + j] = forward;
            labels[j * n + i] = backward;
        }
    }
    labels
}

fn implied_relations(label: RelationshipLabel) -> &'static [&'static str] {
    match label {
        RelationshipLabel::None => &[],
        RelationshipLabel::FbOnly => &["facebook_all_tagged"],
        RelationshipLabel::Socialize => &["socialize_twice_week", "facebook_all_tagged"],
        RelationshipLabel::CloseFriend => {
            &["close_friend", "socialize_twice_week", "facebook_all_tagged"]
        }
    }
}

fn report_rows(
    spec: &SyntheticSpec,
    roster: &Roster,
    labels: &[RelationshipLabel],
    rng: &mut ChaCha8Rng,
) -> String {
    let n = roster.len();
    let mut out = String::from("reporter,target,relation,survey_index\n");
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            let label = labels[i * n + j];
            for wave in 1..=spec.surveys {
                let mut emit = |relation: &str| {
                    let _ = writeln!(out, "{},{},{relation},{wave}", roster.id(i), roster.id(j));
                };
                if label == RelationshipLabel::None {
                    if rng.gen_bool(spec.report_false) {
                        emit("facebook_all_tagged");
                    }
                    continue;
                }
                for relation in implied_relations(label) {
                    if !rng.gen_bool(spec.report_miss) {
                        emit(relation);
                    }
                }
            }
        }
    }
    out
}

fn event_rows(roster: &Roster, layers: &Layers, rng: &mut ChaCha8Rng) -> String {
    let mut rows: Vec<(i64, usize, usize, &str)> = Vec::new();
    let arcs = [
        ("call", &layers.calls),
        ("sms", &layers.sms),
        ("proximity", &layers.proximity),
    ];
    for (channel, arcs) in arcs {
        for &(i, j) in arcs {
            for _ in 0..rng.gen_range(1..=3) {
                let t = WINDOW_START + rng.gen_range(0..WINDOW_SECONDS);
                rows.push((t, i, j, channel));
            }
        }
    }
    rows.sort();
    let mut out = String::from("src,dst,channel,timestamp\n");
    for (t, i, j, channel) in rows {
        let stamp = DateTime::from_timestamp(t, 0)
            .expect("window is representable")
            .format("%Y-%m-%dT%H:%M:%SZ");
        let _ = writeln!(out, "{},{},{channel},{stamp}", roster.id(i), roster.id(j));
    }
    out
}
