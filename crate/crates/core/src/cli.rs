//! Command-line driver: ingestion, lattice, descriptive analysis, Bayesian
//! filtering and emission.
//!
//! Exit codes: 0 success, 1 domain/validation or I/O error, 2 usage or
//! parse error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::bayes::{inductive_graph, PosteriorConfig};
use crate::context::{binarize, parse_context_csv, parse_symbolic_table, validate_context, FormalContext};
use crate::cooccurrence::{
    from_usage_records, parse_pair_tables, parse_usage_records, record_attributes, validate_study, CoOccurrenceStudy,
};
use crate::emit::{limit_rows, report, RenderStyle, ToDot};
use crate::fixtures::{self, PublishedReference};
use crate::implicative::{descriptive_graph, Thresholds};
use crate::lattice::{attribute_implication_net, concepts, lattice_order};
use crate::validation::ValidationReport;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Parse(String),
    Domain(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Parse(_) => 2,
            CliError::Domain(_) | CliError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Parse(m) => write!(f, "parse error: {m}"),
            CliError::Domain(m) => write!(f, "error: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "implinet", version, about = "Concept lattices and implicative graphs from informant term data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a symbolic table and write its binary context.
    Binarize(BinarizeArgs),
    /// Concepts, Hasse diagram and attribute implication net.
    Lattice(LatticeArgs),
    /// Loevinger index report and descriptive implicative graph.
    Describe(DescribeArgs),
    /// Bayesian filtering into the inductive graph.
    Induce(InduceArgs),
    /// Run the selected stages in order with one configuration.
    Pipeline(PipelineArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Binarize,
    Lattice,
    Describe,
    Induce,
}

impl Stage {
    fn name(self) -> &'static str {
        match self {
            Stage::Binarize => "binarize",
            Stage::Lattice => "lattice",
            Stage::Describe => "describe",
            Stage::Induce => "induce",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Dot,
    Csv,
    Text,
}

#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// TOML file with default values for any option.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Artifact formats to write (default: all).
    #[arg(long, value_delimiter = ',')]
    pub format: Vec<Format>,
    /// Use the bundled example tables as inputs.
    #[arg(long)]
    pub paper_data: bool,
}

#[derive(Debug, Args, Default)]
pub struct ThresholdArgs {
    #[arg(long)]
    pub h_tend: Option<f64>,
    #[arg(long)]
    pub h_quasi: Option<f64>,
    #[arg(long)]
    pub edge_min: Option<f64>,
}

#[derive(Debug, Args, Default)]
pub struct PosteriorArgs {
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub prior: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args, Default)]
pub struct StudyInput {
    /// Pair-table CSV (a, b, n11, n10, n01, n00).
    #[arg(long, conflicts_with = "records")]
    pub pairs: Option<PathBuf>,
    /// Line-delimited JSON usage records.
    #[arg(long)]
    pub records: Option<PathBuf>,
    /// Attribute order for usage records (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub attribute_order: Vec<String>,
}

#[derive(Debug, Args)]
pub struct BinarizeArgs {
    /// Symbolic table CSV.
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Attribute column order (comma separated); defaults to first appearance.
    #[arg(long, value_delimiter = ',')]
    pub attribute_order: Vec<String>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct LatticeArgs {
    #[arg(long, conflicts_with = "context")]
    pub table: Option<PathBuf>,
    /// Binary context CSV.
    #[arg(long)]
    pub context: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub attribute_order: Vec<String>,
    #[arg(long)]
    pub force_min: Option<f64>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct DescribeArgs {
    #[command(flatten)]
    pub input: StudyInput,
    #[command(flatten)]
    pub thresholds: ThresholdArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct InduceArgs {
    #[command(flatten)]
    pub input: StudyInput,
    #[command(flatten)]
    pub thresholds: ThresholdArgs,
    #[command(flatten)]
    pub posterior: PosteriorArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[arg(long, conflicts_with = "context")]
    pub table: Option<PathBuf>,
    #[arg(long)]
    pub context: Option<PathBuf>,
    #[arg(long)]
    pub force_min: Option<f64>,
    /// Stages to run (default: all four).
    #[arg(long, value_delimiter = ',')]
    pub stages: Vec<Stage>,
    #[command(flatten)]
    pub input: StudyInput,
    #[command(flatten)]
    pub thresholds: ThresholdArgs,
    #[command(flatten)]
    pub posterior: PosteriorArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

/// Values a `--config` file may set. Command-line flags take precedence.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub table: Option<PathBuf>,
    pub context: Option<PathBuf>,
    pub pairs: Option<PathBuf>,
    pub records: Option<PathBuf>,
    pub attribute_order: Option<Vec<String>>,
    pub out: Option<PathBuf>,
    pub format: Option<Vec<Format>>,
    pub stages: Option<Vec<Stage>>,
    pub paper_data: Option<bool>,
    pub h_tend: Option<f64>,
    pub h_quasi: Option<f64>,
    pub edge_min: Option<f64>,
    pub force_min: Option<f64>,
    pub delta: Option<f64>,
    pub prior: Option<f64>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig, CliError> {
    let Some(path) = path else { return Ok(FileConfig::default()) };
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

/// Inputs from the command line, the config file and the defaults, merged.
#[derive(Debug, Clone)]
struct Effective {
    table: Option<PathBuf>,
    context: Option<PathBuf>,
    pairs: Option<PathBuf>,
    records: Option<PathBuf>,
    attribute_order: Vec<String>,
    out: PathBuf,
    formats: Vec<Format>,
    paper_data: bool,
    force_min: f64,
    thresholds: Thresholds,
    delta: f64,
    prior: f64,
    samples: usize,
    seed: Option<u64>,
}

impl Effective {
    fn merge(
        file: FileConfig,
        common: &CommonArgs,
        thresholds: Option<&ThresholdArgs>,
        posterior: Option<&PosteriorArgs>,
    ) -> Self {
        let defaults = Thresholds::default();
        let post = PosteriorConfig::with_seed(0);
        let t = thresholds.map(|t| (t.h_tend, t.h_quasi, t.edge_min)).unwrap_or_default();
        let p = posterior.map(|p| (p.delta, p.prior, p.samples, p.seed)).unwrap_or_default();
        Self {
            table: file.table,
            context: file.context,
            pairs: file.pairs,
            records: file.records,
            attribute_order: file.attribute_order.unwrap_or_default(),
            out: common.out.clone().or(file.out).unwrap_or_else(|| PathBuf::from(".")),
            formats: if common.format.is_empty() {
                file.format.unwrap_or_else(|| vec![Format::Dot, Format::Csv, Format::Text])
            } else {
                common.format.clone()
            },
            paper_data: common.paper_data || file.paper_data.unwrap_or(false),
            force_min: file.force_min.unwrap_or(1.0),
            thresholds: Thresholds {
                h_tend: t.0.or(file.h_tend).unwrap_or(defaults.h_tend),
                h_quasi: t.1.or(file.h_quasi).unwrap_or(defaults.h_quasi),
                edge_min: t.2.or(file.edge_min).unwrap_or(defaults.edge_min),
            },
            delta: p.0.or(file.delta).unwrap_or(post.delta),
            prior: p.1.or(file.prior).unwrap_or(post.prior_pseudocount),
            samples: p.2.or(file.samples).unwrap_or(post.samples),
            seed: p.3.or(file.seed),
        }
    }

    fn study_input(&mut self, input: &StudyInput) {
        if input.pairs.is_some() || input.records.is_some() {
            self.pairs = input.pairs.clone();
            self.records = input.records.clone();
        }
        if !input.attribute_order.is_empty() {
            self.attribute_order = input.attribute_order.clone();
        }
    }

    fn context_input(&mut self, table: &Option<PathBuf>, context: &Option<PathBuf>) {
        if table.is_some() || context.is_some() {
            self.table = table.clone();
            self.context = context.clone();
        }
    }

    fn thresholds(&self) -> Result<Thresholds, CliError> {
        self.thresholds.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(self.thresholds)
    }

    fn posterior(&self) -> Result<PosteriorConfig, CliError> {
        let seed = self.seed.ok_or_else(|| CliError::Usage("--seed is required when the induce stage runs".into()))?;
        let cfg = PosteriorConfig { prior_pseudocount: self.prior, delta: self.delta, samples: self.samples, seed };
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(cfg)
    }

    fn has_table_input(&self) -> bool {
        self.paper_data || self.table.is_some()
    }

    fn has_context_input(&self) -> bool {
        self.has_table_input() || self.context.is_some()
    }

    fn has_study_input(&self) -> bool {
        self.paper_data || self.pairs.is_some() || self.records.is_some()
    }
}

/// A file a stage produces, tagged with its format.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: &'static str,
    pub format: Format,
    pub contents: String,
}

fn artifact(name: &'static str, format: Format, contents: String) -> Artifact {
    Artifact { name, format, contents }
}

fn read_input(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn report_findings(report: &ValidationReport) -> Result<(), CliError> {
    if report.is_valid() {
        for f in &report.findings {
            eprintln!("{f}");
        }
        Ok(())
    } else {
        Err(CliError::Domain(format!("validation failed\n{}", report.to_string().trim_end())))
    }
}

fn load_context(cfg: &Effective, allow_context_file: bool) -> Result<FormalContext, CliError> {
    let parse = |e: crate::context::ContextError| CliError::Parse(e.to_string());
    let ctx = if let (true, Some(path)) = (allow_context_file, &cfg.context) {
        parse_context_csv(&read_input(path)?).map_err(parse)?
    } else if let Some(path) = &cfg.table {
        binarize(&parse_symbolic_table(&read_input(path)?).map_err(parse)?)
    } else if cfg.paper_data {
        binarize(&parse_symbolic_table(fixtures::INFORMANTS_CSV).map_err(parse)?)
    } else {
        return Err(CliError::Usage("no table or context input given".into()));
    };
    let order: Vec<&str> = if !cfg.attribute_order.is_empty() {
        cfg.attribute_order.iter().map(String::as_str).collect()
    } else if cfg.paper_data && cfg.table.is_none() && cfg.context.is_none() {
        fixtures::CONTEXT_ATTRIBUTES.to_vec()
    } else {
        Vec::new()
    };
    let ctx = if order.is_empty() {
        ctx
    } else {
        ctx.with_attribute_order(&order).map_err(|e| CliError::Usage(e.to_string()))?
    };
    report_findings(&validate_context(&ctx))?;
    Ok(ctx)
}

fn load_study(cfg: &Effective) -> Result<CoOccurrenceStudy, CliError> {
    let study = if let Some(path) = &cfg.pairs {
        parse_pair_tables(&read_input(path)?).map_err(|e| CliError::Parse(e.to_string()))?
    } else if let Some(path) = &cfg.records {
        let records = parse_usage_records(&read_input(path)?).map_err(|e| CliError::Parse(e.to_string()))?;
        let attributes =
            if cfg.attribute_order.is_empty() { record_attributes(&records) } else { cfg.attribute_order.clone() };
        from_usage_records(&records, &attributes).map_err(|e| CliError::Domain(e.to_string()))?
    } else if cfg.paper_data {
        fixtures::bundled_study()
    } else {
        return Err(CliError::Usage("no --pairs or --records input given".into()));
    };
    report_findings(&validate_study(&study))?;
    Ok(study)
}

fn reference(cfg: &Effective) -> Option<PublishedReference> {
    (cfg.paper_data && cfg.pairs.is_none() && cfg.records.is_none()).then(PublishedReference::bundled)
}

fn stage_binarize(cfg: &Effective) -> Result<Vec<Artifact>, CliError> {
    let ctx = load_context(&Effective { context: None, ..cfg.clone() }, false)?;
    Ok(vec![artifact("context.csv", Format::Csv, ctx.to_csv())])
}

fn stage_lattice(cfg: &Effective) -> Result<Vec<Artifact>, CliError> {
    let ctx = load_context(cfg, true)?;
    let lattice = lattice_order(&concepts(&ctx)).map_err(|e| CliError::Domain(e.to_string()))?;
    let net = attribute_implication_net(&ctx, cfg.force_min).map_err(|e| CliError::Usage(e.to_string()))?;
    for a in &net.skipped {
        eprintln!("warning: {a}: empty extent, no outgoing implications");
    }
    let style = RenderStyle::default();
    let mut net_csv = String::from("from,to,force\n");
    let mut writer =
        csv::WriterBuilder::new().has_headers(false).terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    for e in &net.edges {
        writer.write_record([e.from.as_str(), e.to.as_str(), &format!("{:.4}", e.force)]).expect("in-memory write");
    }
    net_csv.push_str(&String::from_utf8(writer.into_inner().expect("flush")).expect("utf-8"));
    Ok(vec![
        artifact("concepts.txt", Format::Text, lattice.listing()),
        artifact("lattice.dot", Format::Dot, lattice.to_dot(&style)),
        artifact("implications.dot", Format::Dot, net.to_dot(&style)),
        artifact("implications.csv", Format::Csv, net_csv),
    ])
}

fn stage_describe(cfg: &Effective) -> Result<Vec<Artifact>, CliError> {
    let thresholds = cfg.thresholds()?;
    let study = load_study(cfg)?;
    let graph = descriptive_graph(&study, &thresholds).map_err(|e| CliError::Domain(e.to_string()))?;
    let set = report(&study, &graph, None, &thresholds, None, reference(cfg).as_ref());
    Ok(vec![
        artifact("h_matrix.csv", Format::Csv, set.h_matrix_csv),
        artifact("h_matrix.txt", Format::Text, set.h_matrix_text),
        artifact("descriptive.dot", Format::Dot, graph.to_dot(&RenderStyle::default())),
        artifact("appendix.txt", Format::Text, set.appendix),
    ])
}

fn stage_induce(cfg: &Effective) -> Result<Vec<Artifact>, CliError> {
    let thresholds = cfg.thresholds()?;
    let posterior = cfg.posterior()?;
    let study = load_study(cfg)?;
    let graph = descriptive_graph(&study, &thresholds).map_err(|e| CliError::Domain(e.to_string()))?;
    let filtered =
        inductive_graph(&graph, &study, &thresholds, &posterior).map_err(|e| CliError::Domain(e.to_string()))?;
    let rows = limit_rows(&graph, &filtered);
    let set = report(&study, &graph, Some(&rows), &thresholds, Some(&posterior), reference(cfg).as_ref());
    Ok(vec![
        artifact("limits.csv", Format::Csv, set.limits_csv.unwrap_or_default()),
        artifact("limits.txt", Format::Text, set.limits_text.unwrap_or_default()),
        artifact("inductive.dot", Format::Dot, filtered.to_dot(&RenderStyle::default())),
        artifact("appendix.txt", Format::Text, set.appendix),
    ])
}

fn write_artifacts(cfg: &Effective, artifacts: &[Artifact]) -> Result<(), CliError> {
    let io = |path: &Path, e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    fs::create_dir_all(&cfg.out).map_err(|e| io(&cfg.out, e))?;
    for a in artifacts.iter().filter(|a| cfg.formats.contains(&a.format)) {
        let path = cfg.out.join(a.name);
        fs::write(&path, &a.contents).map_err(|e| io(&path, e))?;
    }
    Ok(())
}

fn run_stage(stage: Stage, cfg: &Effective) -> Result<(), CliError> {
    let artifacts = match stage {
        Stage::Binarize => stage_binarize(cfg)?,
        Stage::Lattice => stage_lattice(cfg)?,
        Stage::Describe => stage_describe(cfg)?,
        Stage::Induce => stage_induce(cfg)?,
    };
    write_artifacts(cfg, &artifacts)
}

fn require(stage: Stage, ok: bool, what: &str) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Usage(format!("stage {} requires {what}", stage.name())))
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Binarize(args) => {
            let mut cfg = Effective::merge(load_file_config(args.common.config.as_deref())?, &args.common, None, None);
            cfg.context_input(&args.table, &None);
            if !args.attribute_order.is_empty() {
                cfg.attribute_order = args.attribute_order;
            }
            require(Stage::Binarize, cfg.has_table_input(), "--table or --paper-data")?;
            run_stage(Stage::Binarize, &cfg)
        }
        Command::Lattice(args) => {
            let mut cfg = Effective::merge(load_file_config(args.common.config.as_deref())?, &args.common, None, None);
            cfg.context_input(&args.table, &args.context);
            if !args.attribute_order.is_empty() {
                cfg.attribute_order = args.attribute_order;
            }
            if let Some(f) = args.force_min {
                cfg.force_min = f;
            }
            require(Stage::Lattice, cfg.has_context_input(), "--table, --context or --paper-data")?;
            run_stage(Stage::Lattice, &cfg)
        }
        Command::Describe(args) => {
            let file = load_file_config(args.common.config.as_deref())?;
            let mut cfg = Effective::merge(file, &args.common, Some(&args.thresholds), None);
            cfg.study_input(&args.input);
            require(Stage::Describe, cfg.has_study_input(), "--pairs, --records or --paper-data")?;
            run_stage(Stage::Describe, &cfg)
        }
        Command::Induce(args) => {
            let file = load_file_config(args.common.config.as_deref())?;
            let mut cfg = Effective::merge(file, &args.common, Some(&args.thresholds), Some(&args.posterior));
            cfg.study_input(&args.input);
            require(Stage::Induce, cfg.has_study_input(), "--pairs, --records or --paper-data")?;
            run_stage(Stage::Induce, &cfg)
        }
        Command::Pipeline(args) => {
            let file = load_file_config(args.common.config.as_deref())?;
            let file_stages = file.stages.clone();
            let mut cfg = Effective::merge(file, &args.common, Some(&args.thresholds), Some(&args.posterior));
            cfg.context_input(&args.table, &args.context);
            cfg.study_input(&args.input);
            if let Some(f) = args.force_min {
                cfg.force_min = f;
            }
            let mut stages = if args.stages.is_empty() {
                file_stages.unwrap_or_else(|| vec![Stage::Binarize, Stage::Lattice, Stage::Describe, Stage::Induce])
            } else {
                args.stages
            };
            stages.sort_unstable();
            stages.dedup();
            for &stage in &stages {
                match stage {
                    Stage::Binarize => require(stage, cfg.has_table_input(), "--table or --paper-data")?,
                    Stage::Lattice => require(stage, cfg.has_context_input(), "--table, --context or --paper-data")?,
                    Stage::Describe => require(stage, cfg.has_study_input(), "--pairs, --records or --paper-data")?,
                    Stage::Induce => {
                        require(stage, cfg.has_study_input(), "--pairs, --records or --paper-data")?;
                        cfg.posterior()?;
                    }
                }
            }
            for stage in stages {
                run_stage(stage, &cfg)?;
            }
            Ok(())
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
