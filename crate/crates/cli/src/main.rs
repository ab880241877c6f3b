mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tracing::{error, info};

use mplx_core::ingest::{convert_dataset, AdapterConfig, StudyWindow};
use mplx_core::pipeline::{
    run_pipeline, Aggregation, AggregationOp, AnalysisReport, PipelineError, RunConfig,
};
use mplx_core::profiles::Registry;
use mplx_core::stats::{BinEdges, CorrelationMode, Masking, PairMode};
use mplx_core::synth::{generate, SyntheticSpec};
use mplx_core::verify::verify_report;

#[derive(Parser)]
#[command(name = "mplx", version, about = "Multiplex tie strength and homophily analysis")]
struct Cli {
    /// Only log errors.
    #[arg(long, global = true)]
    quiet: bool,
    /// Log as JSON lines on stderr.
    #[arg(long, global = true)]
    json_logs: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a raw dataset into canonical files using an adapter config.
    Ingest {
        #[arg(long)]
        adapter: PathBuf,
        #[arg(long)]
        raw_dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a seeded synthetic dataset in the canonical layout.
    Synth(SynthArgs),
    /// Run the full analysis and write artifacts plus a manifest.
    Analyze(RunArgs),
    /// Render the headline numbers of a finished analysis.
    Report {
        /// Analysis output directory.
        dir: PathBuf,
        #[arg(long, value_enum, default_value_t = ReportFormat::Markdown)]
        format: ReportFormat,
    },
    /// Check an analysis of the MIT Social Evolution data against the
    /// published figures.
    Verify {
        /// Read an existing analysis instead of running one.
        #[arg(long, conflicts_with = "config")]
        from: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Markdown,
    Json,
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory for the canonical files.
    #[arg(long)]
    out: PathBuf,
    /// TOML generator spec; flags below override it.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Homophily strength of the proximity layer.
    #[arg(long)]
    homophily: Option<f64>,
    /// Facebook attachment bias toward same year or sector.
    #[arg(long)]
    fb_bias: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MaskingArg {
    Support,
    None,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    RowSum,
    Cosine,
}

#[derive(Clone, Copy, ValueEnum)]
enum PmfArg {
    Directed,
    Unordered,
}

/// Run configuration: a TOML document plus per-field overrides.
#[derive(Args)]
struct RunArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory holding roster.txt, events.csv, relationships.csv, surveys.csv.
    #[arg(long)]
    data_dir: Option<PathBuf>,
    #[arg(long)]
    roster: Option<PathBuf>,
    #[arg(long)]
    events: Option<PathBuf>,
    #[arg(long)]
    relationships: Option<PathBuf>,
    #[arg(long)]
    surveys: Option<PathBuf>,
    /// Attribute registry TOML (bundled registry when omitted).
    #[arg(long)]
    registry: Option<PathBuf>,
    /// Adapter TOML; converts --raw-dir before analysis.
    #[arg(long)]
    adapter: Option<PathBuf>,
    #[arg(long)]
    raw_dir: Option<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Number of relationship survey waves.
    #[arg(long)]
    survey_waves: Option<u32>,
    /// Start of the study window (inclusive, ISO 8601).
    #[arg(long, requires = "window_end")]
    window_start: Option<String>,
    /// End of the study window (exclusive, ISO 8601).
    #[arg(long, requires = "window_start")]
    window_end: Option<String>,
    /// Edge-length constant c.
    #[arg(long)]
    distance_scale: Option<f64>,
    /// Comma-separated distance bin edges from 0 to 1.
    #[arg(long, value_delimiter = ',')]
    distance_bins: Option<Vec<f64>>,
    /// Comma-separated similarity bin edges from 0 to 1.
    #[arg(long, value_delimiter = ',')]
    similarity_bins: Option<Vec<f64>>,
    /// Permutations for the significance test (0 disables it).
    #[arg(long)]
    permutations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    masking: Option<MaskingArg>,
    #[arg(long, value_enum)]
    correlation_mode: Option<ModeArg>,
    /// Min-max scale attributes by their registry ranges.
    #[arg(long)]
    normalize_profiles: Option<bool>,
    #[arg(long, value_enum)]
    pmf_mode: Option<PmfArg>,
    /// Aggregation as `op:layer,layer`, op one of union, intersection,
    /// exclusive. Repeat to list several; replaces the configured list.
    #[arg(long = "aggregation")]
    aggregations: Vec<String>,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl ToString) -> Self {
        Failure {
            code: 1,
            message: message.to_string(),
        }
    }

    fn internal(message: impl ToString) -> Self {
        Failure {
            code: 2,
            message: message.to_string(),
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Failure {
            code: e.exit_code() as u8,
            message: e.to_string(),
        }
    }
}

fn parse_aggregation(text: &str) -> Result<Aggregation, Failure> {
    let (op, layers) = text
        .split_once(':')
        .ok_or_else(|| Failure::input(format!("aggregation `{text}` is not `op:layers`")))?;
    let op = match op.trim() {
        "union" => AggregationOp::Union,
        "intersection" => AggregationOp::Intersection,
        "exclusive" => AggregationOp::Exclusive,
        other => return Err(Failure::input(format!("unknown aggregation `{other}`"))),
    };
    Ok(Aggregation {
        op,
        layers: layers.split(',').map(|s| s.trim().to_string()).collect(),
    })
}

impl RunArgs {
    fn into_config(self) -> Result<RunConfig, Failure> {
        let mut c = match &self.config {
            Some(path) => RunConfig::load(path).map_err(Failure::input)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field { c.$field = Some(v); }
            )*};
        }
        set!(data_dir, roster, events, relationships, surveys, registry, adapter, raw_dir, distance_scale, seed);
        if let Some(v) = self.output_dir {
            c.output_dir = v;
        }
        if let Some(v) = self.survey_waves {
            c.survey_waves = v;
        }
        if let (Some(start), Some(end)) = (self.window_start, self.window_end) {
            c.window = Some(StudyWindow { start, end });
        }
        if let Some(v) = self.distance_bins {
            c.distance_bins = BinEdges::new(v).map_err(Failure::input)?;
        }
        if let Some(v) = self.similarity_bins {
            c.similarity_bins = BinEdges::new(v).map_err(Failure::input)?;
        }
        if let Some(v) = self.permutations {
            c.permutations = v;
        }
        if let Some(v) = self.masking {
            c.masking = match v {
                MaskingArg::Support => Masking::Support,
                MaskingArg::None => Masking::None,
            };
        }
        if let Some(v) = self.correlation_mode {
            c.correlation_mode = match v {
                ModeArg::RowSum => CorrelationMode::RowSum,
                ModeArg::Cosine => CorrelationMode::Cosine,
            };
        }
        if let Some(v) = self.normalize_profiles {
            c.normalize_profiles = v;
        }
        if let Some(v) = self.pmf_mode {
            c.pmf_mode = match v {
                PmfArg::Directed => PairMode::Directed,
                PmfArg::Unordered => PairMode::Unordered,
            };
        }
        if !self.aggregations.is_empty() {
            c.aggregations = self
                .aggregations
                .iter()
                .map(|a| parse_aggregation(a))
                .collect::<Result<_, _>>()?;
        }
        Ok(c)
    }
}

fn init_logging(quiet: bool, json: bool) {
    use tracing_subscriber::EnvFilter;
    let default = if quiet { "error" } else { "info" };
    let filter = EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new(default));
    let builder = tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr);
    if json {
        builder.json().init();
    } else {
        builder.without_time().with_target(false).init();
    }
}

fn synth(args: SynthArgs) -> Result<(), Failure> {
    let mut spec = match &args.spec {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
            SyntheticSpec::from_toml(&text).map_err(Failure::input)?
        }
        None => SyntheticSpec::default(),
    };
    if let Some(n) = args.nodes {
        spec.n_nodes = n;
    }
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(h) = args.homophily {
        spec = spec.with_homophily(h);
    }
    if let Some(b) = args.fb_bias {
        spec.fb_bias = b;
    }
    let dataset = generate(&spec, &Registry::default()).map_err(Failure::input)?;
    dataset.write(&args.out).map_err(Failure::internal)?;
    info!(nodes = spec.n_nodes, seed = spec.seed, out = %args.out.display(), "synthetic dataset written");
    Ok(())
}

fn ingest(adapter: &Path, raw_dir: &Path, out: &Path) -> Result<(), Failure> {
    let config = AdapterConfig::load(adapter).map_err(Failure::input)?;
    let summary = convert_dataset(&config, raw_dir, out).map_err(Failure::input)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&summary).map_err(Failure::internal)?
    );
    Ok(())
}

fn analyze(args: RunArgs, quiet: bool) -> Result<AnalysisReport, Failure> {
    let config = args.into_config()?;
    let outcome = run_pipeline(&config)?;
    if !quiet {
        println!(
            "wrote {} artifacts to {}",
            outcome.manifest.len(),
            outcome.output_dir.display()
        );
    }
    Ok(outcome.report)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Ingest {
            adapter,
            raw_dir,
            out,
        } => ingest(&adapter, &raw_dir, &out),
        Command::Synth(args) => synth(args),
        Command::Analyze(args) => analyze(args, cli.quiet).map(|_| ()),
        Command::Report { dir, format } => {
            let report = AnalysisReport::load(&dir).map_err(Failure::input)?;
            match format {
                ReportFormat::Markdown => print!("{}", report::markdown(&report)),
                ReportFormat::Json => println!(
                    "{}",
                    serde_json::to_string_pretty(&report).map_err(Failure::internal)?
                ),
            }
            Ok(())
        }
        Command::Verify { from, run } => {
            let report = match from {
                Some(dir) => AnalysisReport::load(&dir).map_err(Failure::input)?,
                None => analyze(run, true)?,
            };
            let verification = verify_report(&report);
            for line in verification.lines() {
                println!("{line}");
            }
            if verification.passed() {
                Ok(())
            } else {
                Err(Failure::input("one or more primary checks failed"))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.quiet, cli.json_logs);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            error!("{}", f.message);
            ExitCode::from(f.code)
        }
    }
}
