//! `annorel`: plan, distribute, compile and score annotation projects.
//!
//! Every command prints its JSON summary to stdout, writes files under
//! `--out` and reports warnings on stderr. Errors exit with the code of the
//! underlying error kind.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use annorel_core::agreement::{AgreementConfig, AgreementMetric, AnnotatorGraph};
use annorel_core::compilation::{AnnotatorTable, CompileOptions};
use annorel_core::distribution::{write_files, DistributeOptions, ResourceSpec, Targets};
use annorel_core::labels::{GeneratorSpec, GeneratorVariant, HardMode};
use annorel_core::pipeline::{
    json_bytes, parse_annotators, run_compile, run_compile_tables, run_distribute, run_labels, run_redistribute,
    run_reliability, Bundle, DistributeRequest, LabelsRequest, Output, RedistributeRequest, ReliabilityRequest,
};
use annorel_core::reliability::ReliabilityConfig;
use annorel_core::viz::{export_graph_2d, export_graph_3d, export_heatmap};
use annorel_core::{Error, Execution, LabelMapping, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "annorel", version, about = "Plan, distribute, compile and score annotation projects")]
struct Cli {
    /// Run data-parallel steps on a single thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the resource plan and split a dataset into per-annotator task files.
    Distribute(DistributeArgs),
    /// Merge returned annotation files (ZIP or directory) into one compiled CSV.
    Compile(CompileArgs),
    /// Add per-annotator and per-sample soft labels plus a hard label.
    Labels(LabelsArgs),
    /// Agreement graph, annotator reliability, heatmap and 3D scene.
    Reliability(ReliabilityArgs),
    /// Give samples of a compiled dataset to annotators who have not seen them.
    Redistribute(RedistributeArgs),
    /// Render a saved agreement graph (graph.json) as images and a 3D scene.
    Visualize(VisualizeArgs),
    /// Run the HTTP service (PORT, MAX_UPLOAD_MB and WORKERS are read from the environment).
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
struct DistributeArgs {
    /// Input CSV; a sample_id column is added when missing.
    #[arg(long = "in", value_name = "CSV")]
    input: PathBuf,
    /// Directory for the task files and spec.json.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Annotator count, or a comma-separated list of names. Omit to solve for it.
    #[arg(long, value_name = "N|NAMES")]
    annotators: Option<String>,
    /// Hours available per annotator. Omit to solve for it.
    #[arg(long, value_name = "HOURS")]
    time: Option<f64>,
    /// Annotations per hour. Omit to solve for it.
    #[arg(long, value_name = "PER_HOUR")]
    rate: Option<f64>,
    /// Distinct samples to annotate. Omit to solve for it.
    #[arg(long, value_name = "N")]
    samples: Option<f64>,
    /// Proportion of each annotator's samples shared with a ring neighbour.
    #[arg(long, value_name = "PROP", default_value_t = 0.0)]
    double: f64,
    /// Proportion of each annotator's samples they label a second time.
    #[arg(long, value_name = "PROP", default_value_t = 0.0)]
    re: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of ring neighbours each annotator shares samples with.
    #[arg(long, value_name = "K", default_value_t = 1)]
    ring_span: usize,
    /// Shuffle the input rows with the seed before assigning them.
    #[arg(long)]
    shuffle: bool,
    /// Also write a project bundle under project/ (format: teamware-like).
    #[arg(long, value_name = "FORMAT")]
    project: Option<String>,
}

#[derive(Debug, Args)]
struct CompileArgs {
    /// ZIP archive or directory of annotation CSVs, one per annotator.
    #[arg(long = "in", value_name = "ZIP|DIR")]
    input: PathBuf,
    /// Directory for compiled.csv.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Rename a column in every file before compiling (repeatable).
    #[arg(long, value_name = "OLD=NEW")]
    rename: Vec<String>,
    /// Column holding the label (repeatable; several are joined with ';').
    #[arg(long, value_name = "NAME")]
    label_column: Vec<String>,
}

#[derive(Debug, Clone, Args)]
struct LabelArgs {
    /// Annotator count or comma-separated names; inferred from the columns when omitted.
    #[arg(long, value_name = "N|NAMES")]
    annotators: Option<String>,
    /// Label generator.
    #[arg(long, value_name = "NAME", default_value = "default", value_parser = parse_variant)]
    label_generator: GeneratorVariant,
    /// Label mapping as comma-separated labels in class order, or a JSON file.
    #[arg(long, value_name = "LABELS|FILE")]
    mapping: Option<String>,
}

#[derive(Debug, Args)]
struct LabelsArgs {
    /// Compiled CSV.
    #[arg(long = "in", value_name = "CSV")]
    input: PathBuf,
    /// Directory for labelled.csv.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    #[command(flatten)]
    labels: LabelArgs,
    /// Reliability report (reliability.json) whose values weight the sample labels.
    #[arg(long, value_name = "FILE")]
    weights: Option<PathBuf>,
    /// How the hard label is chosen.
    #[arg(long, value_enum, default_value = "argmax")]
    hard_mode: HardModeArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum HardModeArg {
    Argmax,
    Majority,
}

#[derive(Debug, Args)]
struct ReliabilityArgs {
    /// Compiled CSV.
    #[arg(long = "in", value_name = "CSV")]
    input: PathBuf,
    /// Directory for the report and images; only stdout when omitted.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[command(flatten)]
    labels: LabelArgs,
    /// Agreement metric: krippendorff, krippendorff_interval, cohen_kappa, fleiss_kappa, cosine, multi_krippendorff.
    #[arg(long, value_name = "NAME", default_value = "krippendorff", value_parser = parse_metric)]
    metric: AgreementMetric,
    /// Weight of intra-annotator agreement against agreement with others.
    #[arg(long, value_name = "A", default_value_t = 0.5)]
    alpha: f64,
    /// Minimum shared samples for an agreement edge.
    #[arg(long, value_name = "N", default_value_t = 15)]
    overlap_threshold: usize,
    /// Comma-separated outputs: reliability, graph, graph3d, heatmap, graph-json.
    #[arg(long, value_name = "LIST", default_value = "reliability,graph,graph3d,heatmap,graph-json", value_parser = parse_outputs)]
    outputs: BTreeSet<Output>,
    /// Heatmap rows (comma-separated names); all annotators when omitted.
    #[arg(long, value_name = "NAMES")]
    heatmap_annotators: Option<String>,
    /// Heatmap columns (comma-separated names); all annotators when omitted.
    #[arg(long, value_name = "NAMES")]
    heatmap_other_annotators: Option<String>,
}

#[derive(Debug, Args)]
struct RedistributeArgs {
    /// Compiled CSV.
    #[arg(long = "in", value_name = "CSV")]
    input: PathBuf,
    /// Directory for the new task files and spec.json.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Annotator count or comma-separated names; inferred from the columns when omitted.
    #[arg(long, value_name = "N|NAMES")]
    annotators: Option<String>,
    /// Most new samples per annotator; derived from --time, --rate and --re when omitted.
    #[arg(long, value_name = "N")]
    capacity: Option<usize>,
    /// Hours available per annotator.
    #[arg(long, value_name = "HOURS")]
    time: Option<f64>,
    /// Annotations per hour.
    #[arg(long, value_name = "PER_HOUR")]
    rate: Option<f64>,
    /// Re-annotation proportion used when deriving the capacity.
    #[arg(long, value_name = "PROP", default_value_t = 0.0)]
    re: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Which samples get an extra annotator: all, disagreement, or a comma-separated id list.
    #[arg(long, value_name = "WHICH", default_value = "all")]
    targets: String,
}

#[derive(Debug, Args)]
struct VisualizeArgs {
    /// Agreement graph JSON as written by `reliability --outputs graph-json`.
    #[arg(long = "in", value_name = "JSON")]
    input: PathBuf,
    /// Directory for the rendered files.
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Comma-separated outputs: graph, graph3d, heatmap.
    #[arg(long, value_name = "LIST", default_value = "graph,graph3d,heatmap", value_parser = parse_outputs)]
    outputs: BTreeSet<Output>,
    /// Heatmap rows (comma-separated names).
    #[arg(long, value_name = "NAMES")]
    heatmap_annotators: Option<String>,
    /// Heatmap columns (comma-separated names).
    #[arg(long, value_name = "NAMES")]
    heatmap_other_annotators: Option<String>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    /// Port to listen on; overrides PORT.
    #[arg(long)]
    port: Option<u16>,
}

fn parse_variant(s: &str) -> std::result::Result<GeneratorVariant, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_metric(s: &str) -> std::result::Result<AgreementMetric, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_outputs(s: &str) -> std::result::Result<BTreeSet<Output>, String> {
    Output::parse_list(s).map_err(|e| e.to_string())
}

fn names_list(s: &Option<String>) -> Option<Vec<String>> {
    s.as_ref().map(|s| s.split(',').map(|n| n.trim().to_owned()).filter(|n| !n.is_empty()).collect())
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn mapping_arg(arg: &Option<String>) -> Result<Option<LabelMapping>> {
    let Some(arg) = arg else { return Ok(None) };
    let path = Path::new(arg);
    if arg.ends_with(".json") && path.is_file() {
        return Ok(Some(serde_json::from_slice(&read(path)?)?));
    }
    LabelMapping::from_labels(arg.split(',').map(str::trim)).map(Some)
}

impl LabelArgs {
    fn annotators(&self) -> Result<Option<Vec<String>>> {
        self.annotators.as_deref().map(parse_annotators).transpose()
    }

    fn generator(&self) -> Result<GeneratorSpec> {
        let mut spec = GeneratorSpec::new(self.label_generator);
        spec.mapping = mapping_arg(&self.mapping)?;
        Ok(spec)
    }
}

// ------------------------------------------------------------------ commands

fn distribute(args: &DistributeArgs) -> Result<Bundle> {
    let (count, names) = match args.annotators.as_deref().map(parse_annotators).transpose()? {
        None => (None, None),
        Some(names) => {
            let numeric = args.annotators.as_deref().is_some_and(|a| a.trim().parse::<usize>().is_ok());
            (Some(names.len() as f64), (!numeric).then_some(names))
        }
    };
    let req = DistributeRequest {
        spec: ResourceSpec {
            annotators: count,
            time: args.time,
            rate: args.rate,
            samples: args.samples,
            double: args.double,
            re: args.re,
        },
        names,
        seed: args.seed,
        options: DistributeOptions { ring_span: args.ring_span, shuffle: args.shuffle },
        project_format: args.project.clone(),
    };
    run_distribute(&read(&args.input)?, &req)
}

fn compile(args: &CompileArgs) -> Result<Bundle> {
    let mut options = CompileOptions::default();
    for r in &args.rename {
        let (old, new) = r
            .split_once('=')
            .ok_or_else(|| Error::InvalidConfig(format!("--rename expects OLD=NEW, got {r:?}")))?;
        options.renames.insert(old.trim().to_owned(), new.trim().to_owned());
    }
    if !args.label_column.is_empty() {
        options.label_columns = args.label_column.clone();
    }
    if args.input.is_dir() {
        let mut paths: Vec<PathBuf> = std::fs::read_dir(&args.input)?
            .map(|e| e.map(|e| e.path()))
            .collect::<std::io::Result<_>>()?;
        paths.sort();
        let mut tables = Vec::new();
        for path in paths {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
            if path.extension().and_then(|e| e.to_str()) != Some("csv") || stem.starts_with(['.', '_']) {
                continue;
            }
            tables.push(AnnotatorTable::from_csv_bytes(stem, &read(&path)?)?);
        }
        if tables.is_empty() {
            return Err(Error::EmptyArchive);
        }
        run_compile_tables(&tables, &options)
    } else {
        run_compile(&read(&args.input)?, &options)
    }
}

fn labels(args: &LabelsArgs, exec: Execution) -> Result<Bundle> {
    let reliability = match &args.weights {
        None => None,
        Some(path) => {
            let report: serde_json::Value = serde_json::from_slice(&read(path)?)?;
            // a full report nests the map under "reliability" twice
            let map = report
                .pointer("/reliability/reliability")
                .or_else(|| report.get("reliability"))
                .unwrap_or(&report);
            Some(serde_json::from_value::<BTreeMap<String, f64>>(map.clone())?)
        }
    };
    let req = LabelsRequest {
        annotators: args.labels.annotators()?,
        generator: args.labels.generator()?,
        reliability,
        hard_mode: match args.hard_mode {
            HardModeArg::Argmax => HardMode::Argmax,
            HardModeArg::Majority => HardMode::Majority,
        },
    };
    run_labels(&read(&args.input)?, &req, exec)
}

fn reliability(args: &ReliabilityArgs, exec: Execution) -> Result<Bundle> {
    let req = ReliabilityRequest {
        annotators: args.labels.annotators()?,
        generator: args.labels.generator()?,
        agreement: AgreementConfig { metric: args.metric, overlap_threshold: args.overlap_threshold },
        reliability: ReliabilityConfig::with_alpha(args.alpha),
        outputs: args.outputs.clone(),
        heatmap_annotators: names_list(&args.heatmap_annotators),
        heatmap_other_annotators: names_list(&args.heatmap_other_annotators),
    };
    run_reliability(&read(&args.input)?, &req, exec)
}

fn redistribute(args: &RedistributeArgs) -> Result<Bundle> {
    let targets = match args.targets.as_str() {
        "all" => Targets::All,
        "disagreement" => Targets::Disagreement,
        ids => Targets::Ids(ids.split(',').map(|s| s.trim().to_owned()).filter(|s| !s.is_empty()).collect()),
    };
    let req = RedistributeRequest {
        annotators: args.annotators.as_deref().map(parse_annotators).transpose()?,
        capacity: args.capacity,
        time: args.time,
        rate: args.rate,
        re: args.re,
        seed: args.seed,
        targets,
    };
    run_redistribute(&read(&args.input)?, &req)
}

fn visualize(args: &VisualizeArgs) -> Result<Bundle> {
    let text = String::from_utf8(read(&args.input)?).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let graph = AnnotatorGraph::from_json(&text)?;
    let mut files = BTreeMap::new();
    for output in &args.outputs {
        match output {
            Output::Graph => {
                files.insert("graph.svg".to_owned(), export_graph_2d(&graph).into_bytes());
            }
            Output::Graph3d => {
                files.insert("scene3d.json".to_owned(), json_bytes(&export_graph_3d(&graph)));
            }
            Output::Heatmap => {
                let (svg, matrix) = export_heatmap(
                    &graph,
                    names_list(&args.heatmap_annotators).as_deref(),
                    names_list(&args.heatmap_other_annotators).as_deref(),
                )?;
                files.insert("heatmap.svg".to_owned(), svg.into_bytes());
                files.insert("heatmap.json".to_owned(), json_bytes(&matrix));
            }
            Output::Reliability | Output::GraphJson => {
                return Err(Error::InvalidConfig(format!("{} cannot be rendered from a graph", output.name())));
            }
        }
    }
    let summary = serde_json::json!({ "files": files.keys().collect::<Vec<_>>() });
    Ok(Bundle { files, summary, warnings: Vec::new() })
}

fn serve(args: &ServeArgs) -> Result<()> {
    let mut config = annorel_service::ServiceConfig::from_env().map_err(Error::InvalidConfig)?;
    if let Some(port) = args.port {
        config.port = port;
    }
    annorel_service::serve_blocking(config)?;
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    let exec = if cli.sequential { Execution::Sequential } else { Execution::default() };
    let (bundle, out) = match &cli.command {
        Command::Distribute(a) => (distribute(a)?, Some(&a.out)),
        Command::Compile(a) => (compile(a)?, Some(&a.out)),
        Command::Labels(a) => (labels(a, exec)?, Some(&a.out)),
        Command::Reliability(a) => (reliability(a, exec)?, a.out.as_ref()),
        Command::Redistribute(a) => (redistribute(a)?, Some(&a.out)),
        Command::Visualize(a) => (visualize(a)?, Some(&a.out)),
        Command::Serve(a) => return serve(a),
    };
    for w in &bundle.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(dir) = out {
        write_files(dir, &bundle.files)?;
    }
    use std::io::Write;
    std::io::stdout().write_all(&json_bytes(&bundle.summary))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error [{}]: {e}", e.code());
            ExitCode::from(e.exit_code().clamp(1, 255) as u8)
        }
    }
}
