//! End-to-end analysis run: canonical inputs in, a directory of artifacts
//! with a content-hashed manifest out.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use tracing::{debug, info, warn};

use crate::distance::distance_matrix;
use crate::graph::{Layer, LayerStats, MultiplexGraph};
use crate::ingest::{
    self, build_multiplex, label_relationships, parse_events, parse_relationships, read_roster,
    AdapterConfig, EventSchema, LabelCounts, LabelMap, RelationshipSchema, StudyWindow,
    EVENTS_FILE, RELATIONSHIPS_FILE, ROSTER_FILE, SURVEYS_FILE,
};
use crate::matrix::WeightedMatrix;
use crate::profiles::{build_profiles, parse_surveys, similarity_matrix, ProfileError, Registry};
use crate::stats::{
    conditional_similarity, deltas_csv, delta_distribution, diversity_deltas, graph_correlation,
    relationship_pmf, significance, spearman_degree_rank, BinEdges, CorrelationMode,
    CorrelationOptions, DeltaSummary, Masking, PairMode, RelationshipPmf, Significance,
    MIN_PERMUTATIONS,
};
use crate::weight::weight_matrix;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const REPORT_FILE: &str = "report.json";
const STAGING_DIR: &str = ".staging";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationOp {
    Union,
    Intersection,
    Exclusive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Aggregation {
    pub op: AggregationOp,
    pub layers: Vec<String>,
}

impl Aggregation {
    fn new(op: AggregationOp, layers: &[&str]) -> Self {
        Aggregation {
            op,
            layers: layers.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn apply(&self, m: &MultiplexGraph) -> Result<Layer, crate::graph::GraphError> {
        let names: Vec<&str> = self.layers.iter().map(String::as_str).collect();
        match self.op {
            AggregationOp::Union => m.union(&names),
            AggregationOp::Intersection => m.intersection(&names),
            AggregationOp::Exclusive => match names.as_slice() {
                [one] => m.exclusive_edges(one),
                _ => Err(crate::graph::GraphError::EmptySelection),
            },
        }
    }
}

pub fn default_aggregations() -> Vec<Aggregation> {
    vec![
        Aggregation::new(AggregationOp::Exclusive, &["proximity"]),
        Aggregation::new(AggregationOp::Intersection, &["calls", "proximity"]),
        Aggregation::new(AggregationOp::Intersection, &["sms", "proximity"]),
        Aggregation::new(AggregationOp::Intersection, &["calls", "sms", "proximity"]),
        Aggregation::new(AggregationOp::Union, &["calls", "sms", "proximity"]),
    ]
}

/// Everything one analysis run needs. Input paths default to the canonical
/// file names inside `data_dir`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data_dir: Option<PathBuf>,
    pub roster: Option<PathBuf>,
    pub events: Option<PathBuf>,
    pub relationships: Option<PathBuf>,
    pub surveys: Option<PathBuf>,
    /// Attribute registry; the bundled one when unset.
    pub registry: Option<PathBuf>,
    /// Adapter TOML converting `raw_dir` before the run.
    pub adapter: Option<PathBuf>,
    pub raw_dir: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub survey_waves: u32,
    pub window: Option<StudyWindow>,
    /// Edge-length constant `c`; derived from the layer count when unset.
    pub distance_scale: Option<f64>,
    pub distance_bins: BinEdges,
    pub similarity_bins: BinEdges,
    /// 0 disables the permutation test.
    pub permutations: usize,
    pub seed: Option<u64>,
    pub masking: Masking,
    pub correlation_mode: CorrelationMode,
    pub normalize_profiles: bool,
    pub pmf_mode: PairMode,
    pub aggregations: Vec<Aggregation>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data_dir: None,
            roster: None,
            events: None,
            relationships: None,
            surveys: None,
            registry: None,
            adapter: None,
            raw_dir: None,
            output_dir: PathBuf::from("analysis"),
            survey_waves: 6,
            window: None,
            distance_scale: None,
            distance_bins: BinEdges::default(),
            similarity_bins: BinEdges::default(),
            permutations: 1000,
            seed: None,
            masking: Masking::default(),
            correlation_mode: CorrelationMode::default(),
            normalize_profiles: false,
            pmf_mode: PairMode::default(),
            aggregations: default_aggregations(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error("{what} `{}` does not exist", path.display())]
    MissingInput { what: &'static str, path: PathBuf },
}

/// Input paths after defaults are applied.
#[derive(Debug, Clone, PartialEq)]
pub struct InputPaths {
    pub roster: PathBuf,
    pub events: PathBuf,
    pub relationships: PathBuf,
    pub surveys: PathBuf,
}

impl RunConfig {
    /// Reads a TOML config; relative paths are taken from the file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config: RunConfig = toml::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        if let Some(base) = path.parent() {
            config.resolve_relative(base);
        }
        Ok(config)
    }

    pub fn resolve_relative(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        };
        for p in [
            &mut self.data_dir,
            &mut self.roster,
            &mut self.events,
            &mut self.relationships,
            &mut self.surveys,
            &mut self.registry,
            &mut self.adapter,
            &mut self.raw_dir,
        ] {
            fix(p);
        }
        if self.output_dir.is_relative() {
            self.output_dir = base.join(&self.output_dir);
        }
    }

    fn input(&self, explicit: &Option<PathBuf>, file: &str, what: &'static str) -> Result<PathBuf, ConfigError> {
        match (explicit, &self.data_dir) {
            (Some(p), _) => Ok(p.clone()),
            (None, Some(dir)) => Ok(dir.join(file)),
            (None, None) => Err(ConfigError::Invalid(format!(
                "no {what} path and no data_dir"
            ))),
        }
    }

    /// Input paths, with the canonical names under `data_dir` as defaults.
    pub fn input_paths(&self) -> Result<InputPaths, ConfigError> {
        Ok(InputPaths {
            roster: self.input(&self.roster, ROSTER_FILE, "roster")?,
            events: self.input(&self.events, EVENTS_FILE, "events")?,
            relationships: self.input(&self.relationships, RELATIONSHIPS_FILE, "relationships")?,
            surveys: self.input(&self.surveys, SURVEYS_FILE, "surveys")?,
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.permutations > 0 {
            if self.permutations < MIN_PERMUTATIONS {
                return Err(ConfigError::Invalid(format!(
                    "permutations must be 0 or at least {MIN_PERMUTATIONS}, got {}",
                    self.permutations
                )));
            }
            if self.seed.is_none() {
                return Err(ConfigError::Invalid(
                    "a seed is required when the permutation test is enabled".into(),
                ));
            }
        }
        if self.survey_waves == 0 {
            return Err(ConfigError::Invalid("survey_waves must be positive".into()));
        }
        if let Some(c) = self.distance_scale {
            if !(c.is_finite() && c > 0.0) {
                return Err(ConfigError::Invalid(format!(
                    "distance_scale must be positive, got {c}"
                )));
            }
        }
        if self.aggregations.is_empty() {
            return Err(ConfigError::Invalid("at least one aggregation is required".into()));
        }
        if let Some(w) = &self.window {
            w.bounds().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        let exists = |what: &'static str, path: &Path| {
            if path.exists() {
                Ok(())
            } else {
                Err(ConfigError::MissingInput {
                    what,
                    path: path.to_path_buf(),
                })
            }
        };
        match (&self.adapter, &self.raw_dir) {
            (Some(adapter), Some(raw)) => {
                exists("adapter", adapter)?;
                exists("raw_dir", raw)?;
            }
            (None, None) => {
                let p = self.input_paths()?;
                exists("roster", &p.roster)?;
                exists("events", &p.events)?;
                exists("relationships", &p.relationships)?;
                exists("surveys", &p.surveys)?;
            }
            _ => {
                return Err(ConfigError::Invalid(
                    "adapter and raw_dir must be given together".into(),
                ))
            }
        }
        if let Some(r) = &self.registry {
            exists("registry", r)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Config,
    Convert,
    Load,
    Build,
    Label,
    Profiles,
    Distance,
    Statistics,
    Write,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("unit variant");
        f.write_str(s.as_str().unwrap_or("?"))
    }
}

/// Input problems exit with 1, everything else with 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    Input,
    Internal,
}

#[derive(Debug, Error)]
#[error("{stage} stage failed: {source}")]
pub struct PipelineError {
    pub stage: Stage,
    pub kind: FailureKind,
    #[source]
    pub source: Box<dyn std::error::Error + Send + Sync>,
}

impl PipelineError {
    fn input(stage: Stage, e: impl Into<Box<dyn std::error::Error + Send + Sync>>) -> Self {
        PipelineError {
            stage,
            kind: FailureKind::Input,
            source: e.into(),
        }
    }

    fn internal(stage: Stage, e: impl Into<Box<dyn std::error::Error + Send + Sync>>) -> Self {
        PipelineError {
            stage,
            kind: FailureKind::Internal,
            source: e.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            FailureKind::Input => 1,
            FailureKind::Internal => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub artifact_kind: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Fraction of `a`'s undirected edges also present in `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerOverlap {
    pub layer: String,
    pub within: String,
    pub shared_edges: usize,
    pub fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSummary {
    pub participants: usize,
    pub events: usize,
    pub dropped_external_events: usize,
    pub dropped_outside_window: usize,
    pub reports: usize,
    pub dropped_external_reports: usize,
    pub survey_series: usize,
    pub dropped_survey_rows: usize,
    pub missing_survey_values: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryReport {
    pub category: String,
    pub profiles: usize,
    pub incomplete_profiles: usize,
    pub zero_vectors: usize,
    pub graph_correlation: Option<f64>,
    pub correlation_nodes: usize,
    pub significance: Option<Significance>,
    pub spearman_rho: Option<f64>,
    pub spearman_nodes: usize,
    pub conditional_pairs: usize,
    pub delta: Option<DeltaSummary>,
    /// Why a statistic is missing, if one is.
    pub notes: Vec<String>,
}

/// Headline numbers of a run, written as `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub inputs: InputSummary,
    pub layers: Vec<LayerStats>,
    pub overlaps: Vec<LayerOverlap>,
    pub distance_scale: f64,
    pub label_counts: LabelCounts,
    /// Label counts over ordered pairs tied in the union of all layers.
    pub label_counts_on_union: LabelCounts,
    pub hierarchy_violations: usize,
    pub pmfs: Vec<RelationshipPmf>,
    pub categories: Vec<CategoryReport>,
}

impl AnalysisReport {
    pub fn layer(&self, name: &str) -> Option<&LayerStats> {
        self.layers.iter().find(|l| l.layer == name)
    }

    pub fn overlap(&self, layer: &str, within: &str) -> Option<&LayerOverlap> {
        self.overlaps
            .iter()
            .find(|o| o.layer == layer && o.within == within)
    }

    pub fn pmf(&self, aggregation: &str) -> Option<&RelationshipPmf> {
        self.pmfs.iter().find(|p| p.aggregation == aggregation)
    }

    pub fn category(&self, name: &str) -> Option<&CategoryReport> {
        self.categories.iter().find(|c| c.category == name)
    }

    pub fn load(dir: &Path) -> Result<Self, ConfigError> {
        let path = dir.join(REPORT_FILE);
        let text = fs::read_to_string(&path).map_err(|source| ConfigError::Read {
            path: path.clone(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| ConfigError::Parse {
            path,
            message: e.to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub report: AnalysisReport,
    pub manifest: Vec<ManifestEntry>,
    pub output_dir: PathBuf,
}

/// Artifacts collected in memory, keyed by relative path.
#[derive(Default)]
struct Artifacts {
    files: BTreeMap<String, (String, Vec<u8>)>,
}

impl Artifacts {
    fn add(&mut self, path: impl Into<String>, kind: &str, bytes: impl Into<Vec<u8>>) {
        self.files.insert(path.into(), (kind.to_string(), bytes.into()));
    }

    fn json<T: Serialize>(&mut self, path: impl Into<String>, kind: &str, value: &T) {
        let mut text = serde_json::to_string_pretty(value).expect("artifact serializes");
        text.push('\n');
        self.add(path, kind, text);
    }

    fn manifest(&self) -> Vec<ManifestEntry> {
        self.files
            .iter()
            .map(|(path, (kind, bytes))| ManifestEntry {
                path: path.clone(),
                sha256: sha256_hex(bytes),
                artifact_kind: kind.clone(),
            })
            .collect()
    }
}

/// File-name form of an aggregation or category name.
pub fn slug(name: &str) -> String {
    let mut out = String::new();
    for ch in name.chars() {
        if ch.is_ascii_alphanumeric() {
            out.push(ch.to_ascii_lowercase());
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    out.trim_matches('_').to_string()
}

/// Runs every stage and writes the artifacts under `config.output_dir`.
///
/// Files are first written to a staging directory inside the output
/// directory and moved into place only when every stage succeeded.
pub fn run_pipeline(config: &RunConfig) -> Result<RunOutcome, PipelineError> {
    config
        .validate()
        .map_err(|e| PipelineError::input(Stage::Config, e))?;
    let out = &config.output_dir;
    let created_out = !out.exists();
    fs::create_dir_all(out).map_err(|e| PipelineError::internal(Stage::Write, e))?;
    let staging = out.join(STAGING_DIR);
    let result = run_staged(config, &staging);
    match result {
        Ok(outcome) => Ok(outcome),
        Err(e) => {
            let _ = fs::remove_dir_all(&staging);
            if created_out {
                let _ = fs::remove_dir_all(out);
            }
            Err(e)
        }
    }
}

fn run_staged(config: &RunConfig, staging: &Path) -> Result<RunOutcome, PipelineError> {
    if staging.exists() {
        fs::remove_dir_all(staging).map_err(|e| PipelineError::internal(Stage::Write, e))?;
    }
    fs::create_dir_all(staging).map_err(|e| PipelineError::internal(Stage::Write, e))?;

    let mut artifacts = Artifacts::default();
    let paths = match (&config.adapter, &config.raw_dir) {
        (Some(adapter), Some(raw)) => {
            let dataset = staging.join("dataset");
            let adapter = AdapterConfig::load(adapter)
                .map_err(|e| PipelineError::input(Stage::Convert, e))?;
            let summary = ingest::convert_dataset(&adapter, raw, &dataset)
                .map_err(|e| PipelineError::input(Stage::Convert, e))?;
            info!(participants = summary.participants, events = summary.events, "converted raw dataset");
            for file in [ROSTER_FILE, EVENTS_FILE, RELATIONSHIPS_FILE, SURVEYS_FILE] {
                let bytes = fs::read(dataset.join(file))
                    .map_err(|e| PipelineError::internal(Stage::Convert, e))?;
                artifacts.add(format!("dataset/{file}"), "dataset", bytes);
            }
            fs::remove_dir_all(&dataset).map_err(|e| PipelineError::internal(Stage::Convert, e))?;
            artifacts.json("dataset/conversion.json", "diagnostics", &summary);
            None
        }
        _ => Some(
            config
                .input_paths()
                .map_err(|e| PipelineError::input(Stage::Config, e))?,
        ),
    };
    let read = |path: &Path| -> Result<Vec<u8>, PipelineError> {
        fs::read(path).map_err(|e| PipelineError::input(Stage::Load, e))
    };
    let (roster_bytes, event_bytes, relationship_bytes, survey_bytes) = match &paths {
        Some(p) => (
            read(&p.roster)?,
            read(&p.events)?,
            read(&p.relationships)?,
            read(&p.surveys)?,
        ),
        None => {
            let get = |f: &str| artifacts.files[&format!("dataset/{f}")].1.clone();
            (
                get(ROSTER_FILE),
                get(EVENTS_FILE),
                get(RELATIONSHIPS_FILE),
                get(SURVEYS_FILE),
            )
        }
    };

    let report = analyze(
        config,
        &roster_bytes,
        &event_bytes,
        &relationship_bytes,
        &survey_bytes,
        &mut artifacts,
    )?;
    artifacts.json(REPORT_FILE, "report", &report);

    let manifest = artifacts.manifest();
    for (path, (_, bytes)) in &artifacts.files {
        let target = staging.join(path);
        if let Some(parent) = target.parent() {
            fs::create_dir_all(parent).map_err(|e| PipelineError::internal(Stage::Write, e))?;
        }
        fs::write(&target, bytes).map_err(|e| PipelineError::internal(Stage::Write, e))?;
    }
    let mut manifest_text =
        serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    manifest_text.push('\n');
    fs::write(staging.join(MANIFEST_FILE), manifest_text)
        .map_err(|e| PipelineError::internal(Stage::Write, e))?;

    let out = &config.output_dir;
    let mut names: Vec<String> = artifacts
        .files
        .keys()
        .map(|p| p.split('/').next().unwrap_or(p).to_string())
        .collect();
    names.push(MANIFEST_FILE.to_string());
    names.sort();
    names.dedup();
    for name in names {
        let target = out.join(&name);
        if target.is_dir() {
            fs::remove_dir_all(&target).map_err(|e| PipelineError::internal(Stage::Write, e))?;
        }
        fs::rename(staging.join(&name), &target)
            .map_err(|e| PipelineError::internal(Stage::Write, e))?;
    }
    fs::remove_dir_all(staging).map_err(|e| PipelineError::internal(Stage::Write, e))?;
    info!(artifacts = manifest.len(), dir = %out.display(), "analysis written");
    Ok(RunOutcome {
        report,
        manifest,
        output_dir: out.clone(),
    })
}

fn analyze(
    config: &RunConfig,
    roster_bytes: &[u8],
    event_bytes: &[u8],
    relationship_bytes: &[u8],
    survey_bytes: &[u8],
    artifacts: &mut Artifacts,
) -> Result<AnalysisReport, PipelineError> {
    let load = |e: Box<dyn std::error::Error + Send + Sync>| PipelineError::input(Stage::Load, e);
    let registry = match &config.registry {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| load(e.into()))?;
            Registry::from_toml(&text).map_err(|e| load(e.into()))?
        }
        None => Registry::default(),
    };
    let roster = Arc::new(read_roster(roster_bytes).map_err(|e| load(e.into()))?);
    let events = parse_events(
        event_bytes,
        &EventSchema::default(),
        &roster,
        config.window.as_ref(),
    )
    .map_err(|e| load(e.into()))?;
    let reports = parse_relationships(
        relationship_bytes,
        &RelationshipSchema::default(),
        &roster,
        config.survey_waves,
    )
    .map_err(|e| load(e.into()))?;
    let surveys = parse_surveys(survey_bytes, &registry, &roster).map_err(|e| load(e.into()))?;
    let inputs = InputSummary {
        participants: roster.len(),
        events: events.events.len(),
        dropped_external_events: events.dropped_external,
        dropped_outside_window: events.dropped_outside_window,
        reports: reports.reports.len(),
        dropped_external_reports: reports.dropped_external,
        survey_series: surveys.series.len(),
        dropped_survey_rows: surveys.dropped_external,
        missing_survey_values: surveys.missing_values,
    };
    debug!(?inputs, "inputs loaded");

    let multiplex = build_multiplex(&events.events, &roster)
        .map_err(|e| PipelineError::input(Stage::Build, e))?;
    let layers: Vec<LayerStats> = multiplex.layers().iter().map(Layer::stats).collect();
    let overlaps = layer_overlaps(&multiplex);
    artifacts.add("multiplex.json", "graph", multiplex.to_json() + "\n");
    artifacts.json("layers.json", "layer_stats", &layers);
    artifacts.add("layers.csv", "layer_stats", layer_stats_csv(&layers));
    artifacts.json("overlaps.json", "layer_stats", &overlaps);

    let labels = label_relationships(&reports.reports, config.survey_waves, &roster)
        .map_err(|e| PipelineError::input(Stage::Label, e))?;
    let all_layers: Vec<&str> = multiplex.layers().iter().map(Layer::name).collect();
    let union = multiplex
        .union(&all_layers)
        .map_err(|e| PipelineError::internal(Stage::Label, e))?;
    let label_counts = labels.counts();
    let label_counts_on_union = labels.counts_on(&union);
    artifacts.add("labels.csv", "labels", labels.to_csv());
    artifacts.json(
        "label_counts.json",
        "labels",
        &serde_json::json!({
            "all_pairs": label_counts,
            "union_pairs": label_counts_on_union,
            "hierarchy_violations": labels.hierarchy_violations().len(),
        }),
    );
    if !labels.hierarchy_violations().is_empty() {
        warn!(
            count = labels.hierarchy_violations().len(),
            "labels above a relation the reporter did not also report"
        );
    }

    let profiles = build_profiles(&surveys, &registry, &roster, config.normalize_profiles)
        .map_err(|e| PipelineError::input(Stage::Profiles, e))?;

    let weights = weight_matrix(&multiplex.symmetrized());
    let distance = distance_matrix(&weights, config.distance_scale)
        .map_err(|e| PipelineError::input(Stage::Distance, e))?;
    let scale = config
        .distance_scale
        .unwrap_or_else(|| crate::distance::default_scale(multiplex.layer_count()));
    artifacts.add("weights.csv", "weights", weights.to_csv());
    artifacts.add("distance.csv", "distance", distance.to_csv());

    let stat = |e: crate::stats::StatsError| PipelineError::input(Stage::Statistics, e);
    let mut pmfs = Vec::new();
    for agg in &config.aggregations {
        let layer = agg
            .apply(&multiplex)
            .map_err(|e| PipelineError::input(Stage::Statistics, e))?;
        let pmf = relationship_pmf(&layer, &labels, config.pmf_mode).map_err(stat)?;
        let name = slug(&pmf.aggregation);
        artifacts.add(format!("pmf/{name}.csv"), "pmf", pmf.to_csv());
        artifacts.json(format!("pmf/{name}.json"), "pmf", &pmf);
        pmfs.push(pmf);
    }

    let opts = CorrelationOptions {
        masking: config.masking,
        mode: config.correlation_mode,
    };
    let mut categories = Vec::new();
    let mut all_deltas = Vec::new();
    let mut summaries = Vec::new();
    for category in registry.category_names() {
        let vectors = profiles.category(category);
        let mut report = CategoryReport {
            category: category.to_string(),
            profiles: vectors.len(),
            incomplete_profiles: profiles.incomplete.get(category).map_or(0, Vec::len),
            zero_vectors: 0,
            graph_correlation: None,
            correlation_nodes: 0,
            significance: None,
            spearman_rho: None,
            spearman_nodes: 0,
            conditional_pairs: 0,
            delta: None,
            notes: Vec::new(),
        };
        let sim = match similarity_matrix(&roster, vectors, category) {
            Ok(sim) => sim,
            Err(e @ ProfileError::TooFewProfiles { .. }) => {
                warn!(category, "skipping category: {e}");
                report.notes.push(e.to_string());
                categories.push(report);
                continue;
            }
            Err(e) => return Err(PipelineError::input(Stage::Profiles, e)),
        };
        report.zero_vectors = sim.zero_vectors.len();
        let name = slug(category);
        artifacts.add(format!("similarity/{name}.csv"), "similarity", sim.matrix.to_csv());
        artifacts.json(
            format!("similarity/{name}.json"),
            "similarity",
            &sim.matrix.to_document(),
        );

        category_statistics(
            config,
            opts,
            &weights,
            &distance,
            &sim.matrix,
            &labels,
            &union,
            category,
            &mut report,
            artifacts,
            &mut all_deltas,
        )
        .map_err(stat)?;
        if let Some(d) = &report.delta {
            summaries.push(d.clone());
        }
        categories.push(report);
    }
    artifacts.add("diversity/deltas.csv", "diversity", deltas_csv(&all_deltas));
    let mut summary_csv = DeltaSummary::csv_header().to_string();
    for s in &summaries {
        summary_csv.push_str(&s.csv_row());
    }
    artifacts.add("diversity/summary.csv", "diversity", summary_csv);
    artifacts.json("diversity/summary.json", "diversity", &summaries);
    artifacts.add("correlations.csv", "correlation", correlations_csv(&categories));
    artifacts.json(
        "diagnostics.json",
        "diagnostics",
        &serde_json::json!({
            "inputs": inputs,
            "incomplete_profiles": profiles.incomplete,
            "hierarchy_violations": labels.hierarchy_violations().iter().map(|v| {
                serde_json::json!({"src": v.src, "dst": v.dst, "label": v.label, "missing": v.missing})
            }).collect::<Vec<_>>(),
            "category_notes": categories.iter().map(|c| (c.category.clone(), c.notes.clone())).collect::<BTreeMap<_, _>>(),
        }),
    );

    Ok(AnalysisReport {
        inputs,
        layers,
        overlaps,
        distance_scale: scale,
        label_counts,
        label_counts_on_union,
        hierarchy_violations: labels.hierarchy_violations().len(),
        pmfs,
        categories,
    })
}

#[allow(clippy::too_many_arguments)]
fn category_statistics(
    config: &RunConfig,
    opts: CorrelationOptions,
    weights: &WeightedMatrix,
    distance: &WeightedMatrix,
    sim: &WeightedMatrix,
    labels: &LabelMap,
    union: &Layer,
    category: &str,
    report: &mut CategoryReport,
    artifacts: &mut Artifacts,
    all_deltas: &mut Vec<crate::stats::DiversityDelta>,
) -> Result<(), crate::stats::StatsError> {
    use crate::stats::StatsError;
    let name = slug(category);

    match graph_correlation(weights, sim, opts) {
        Ok(gc) => {
            report.graph_correlation = Some(gc.value);
            report.correlation_nodes = gc.defined_nodes;
            artifacts.json(format!("correlation/{name}.json"), "correlation", &gc);
            if config.permutations > 0 {
                let seed = config.seed.expect("validated");
                let sig = significance(weights, sim, config.permutations, seed, opts)?;
                report.significance = Some(sig);
            }
        }
        Err(StatsError::NoDefinedNodes) => report.notes.push(StatsError::NoDefinedNodes.to_string()),
        Err(e) => return Err(e),
    }

    let rank = spearman_degree_rank(weights, sim, config.masking)?;
    report.spearman_rho = rank.rho;
    report.spearman_nodes = rank.nodes.len();
    if rank.rho.is_none() {
        report.notes.push("degree rank correlation undefined (constant degrees)".into());
    }
    artifacts.json(format!("spearman/{name}.json"), "correlation", &rank);

    match conditional_similarity(
        distance,
        sim,
        category,
        &config.distance_bins,
        &config.similarity_bins,
    ) {
        Ok(table) => {
            report.conditional_pairs = table.pairs;
            artifacts.add(format!("conditional/{name}.csv"), "conditional", table.to_csv());
            artifacts.add(
                format!("conditional/{name}_counts.csv"),
                "conditional",
                table.counts_csv(),
            );
            artifacts.json(format!("conditional/{name}.json"), "conditional", &table);
        }
        Err(StatsError::EmptySupport) => report.notes.push(StatsError::EmptySupport.to_string()),
        Err(e) => return Err(e),
    }

    let deltas = diversity_deltas(labels, union, sim, category)?;
    match delta_distribution(&deltas, category) {
        Ok(summary) => report.delta = Some(summary),
        Err(e @ StatsError::NoDefinedDeltas(_)) => report.notes.push(e.to_string()),
        Err(e) => return Err(e),
    }
    all_deltas.extend(deltas);
    Ok(())
}

fn layer_overlaps(m: &MultiplexGraph) -> Vec<LayerOverlap> {
    let sym: Vec<Layer> = m.layers().iter().map(Layer::symmetrized).collect();
    let mut out = Vec::new();
    for a in &sym {
        for b in sym.iter().filter(|b| b.name() != a.name()) {
            let edges = a.edges();
            let shared = edges.iter().filter(|&&(i, j)| b.connected(i, j)).count();
            out.push(LayerOverlap {
                layer: a.name().to_string(),
                within: b.name().to_string(),
                shared_edges: shared,
                fraction: (!edges.is_empty()).then(|| shared as f64 / edges.len() as f64),
            });
        }
    }
    out
}

fn layer_stats_csv(layers: &[LayerStats]) -> String {
    let mut out = String::from("layer,directed,nodes,edges,avg_degree\n");
    for l in layers {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            l.layer, l.directed, l.nodes, l.edges, l.avg_degree
        ));
    }
    out
}

fn correlations_csv(categories: &[CategoryReport]) -> String {
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    let mut out = String::from(
        "category,graph_correlation,nodes,p_value,permutations,null_mean,null_sd,spearman_rho,spearman_nodes\n",
    );
    for c in categories {
        let sig = c.significance.as_ref();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            c.category,
            opt(c.graph_correlation),
            c.correlation_nodes,
            opt(sig.map(|s| s.p_value)),
            sig.map(|s| s.permutations.to_string()).unwrap_or_default(),
            opt(sig.map(|s| s.null_mean)),
            opt(sig.map(|s| s.null_sd)),
            opt(c.spearman_rho),
            c.spearman_nodes,
        ));
    }
    out
}
