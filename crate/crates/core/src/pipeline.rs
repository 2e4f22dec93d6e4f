//! End-to-end workflows shared by the command line and the HTTP service.
//!
//! Each workflow takes raw bytes plus a request and returns a [`Bundle`]: the
//! files to write or zip, a JSON summary, and warnings. Both front ends emit
//! exactly these bytes, which keeps their outputs identical.

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::agreement::{build_graph, AgreementConfig, AnnotatorGraph};
use crate::compilation::{compile, generate_project, unpack_archive, AnnotatorTable, CompileOptions};
use crate::distribution::{
    distribute, export_allocation, redistribute, solve_resources, Allocation, DistributeOptions, ResourceSpec,
    SolvedResources, Targets,
};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::frame::{is_reserved_column, reannotation_column, AnnotationFrame};
use crate::labels::{
    add_annotation_prob_labels, add_sample_hard_labels, add_sample_prob_labels, annotation_prob_labels,
    sample_hard_labels, sample_prob_labels, GeneratorSpec, HardMode, LabelGenerator,
};
use crate::reliability::{compute_reliability, ReliabilityConfig};
use crate::viz::{export_graph_2d, export_graph_3d, export_heatmap};

pub const SPEC_FILE: &str = "spec.json";
pub const COMPILED_FILE: &str = "compiled.csv";
pub const LABELLED_FILE: &str = "labelled.csv";
pub const REPORT_FILE: &str = "reliability.json";

#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    pub files: BTreeMap<String, Vec<u8>>,
    pub summary: Value,
    pub warnings: Vec<String>,
}

/// Pretty JSON with a trailing newline, the form every JSON output takes.
pub fn json_bytes<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("value serialises");
    out.push(b'\n');
    out
}

/// `"6"` means six annotators named `a1`..`a6`; anything else is a
/// comma-separated list of names.
pub fn parse_annotators(arg: &str) -> Result<Vec<String>> {
    if let Ok(n) = arg.trim().parse::<usize>() {
        return Ok(default_names(n));
    }
    let names: Vec<String> = arg.split(',').map(|s| s.trim().to_owned()).filter(|s| !s.is_empty()).collect();
    check_names(&names)?;
    Ok(names)
}

pub fn default_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("a{i}")).collect()
}

fn check_names(names: &[String]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for name in names {
        if is_reserved_column(name) || name.starts_with('_') || name.contains(['/', '\\']) {
            return Err(Error::InvalidConfig(format!("{name:?} cannot be used as an annotator name")));
        }
        if !seen.insert(name) {
            return Err(Error::AnnotatorCollision(name.clone()));
        }
    }
    Ok(())
}

fn annotators_or_inferred(frame: &AnnotationFrame, given: &Option<Vec<String>>) -> Result<Vec<String>> {
    let names = match given {
        Some(names) => names.clone(),
        None => frame.infer_annotators(),
    };
    if names.is_empty() {
        return Err(Error::InvalidConfig("no annotator columns found; name them explicitly".into()));
    }
    check_names(&names)?;
    for name in &names {
        frame.require_column(name)?;
    }
    Ok(names)
}

// ---------------------------------------------------------------- distribute

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributeRequest {
    #[serde(flatten)]
    pub spec: ResourceSpec,
    /// Names to use; when `None` they are `a1..an` for the solved count.
    #[serde(default)]
    pub names: Option<Vec<String>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub options: DistributeOptions,
    /// Also emit a project bundle under `project/` in this format.
    #[serde(default)]
    pub project_format: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct DistributeSummary<'a> {
    resources: &'a SolvedResources,
    seed: u64,
    annotators: Vec<&'a str>,
    loads: BTreeMap<&'a str, usize>,
    reannotations: BTreeMap<&'a str, usize>,
    assigned: usize,
    leftover: usize,
}

/// Solves the plan, allocates the rows of `data` and exports one CSV per
/// annotator, the leftover pool and `spec.json`.
pub fn run_distribute(data: &[u8], req: &DistributeRequest) -> Result<Bundle> {
    let frame = AnnotationFrame::from_csv_bytes(data, true)?;
    let mut spec = req.spec;
    if let Some(names) = &req.names {
        check_names(names)?;
        match spec.annotators {
            Some(n) if (n - names.len() as f64).abs() > f64::EPSILON => {
                return Err(Error::InvalidConfig(format!("{} names given for {n} annotators", names.len())));
            }
            _ => spec.annotators = Some(names.len() as f64),
        }
    }
    let plan = solve_resources(&spec)?;
    let names = req.names.clone().unwrap_or_else(|| default_names(plan.annotators));
    let (alloc, warnings) = distribute(&frame, &names, &plan, req.seed, req.options)?;
    let mut files = export_allocation(&alloc, &frame)?;
    if let Some(format) = &req.project_format {
        for (name, bytes) in generate_project(&frame, &alloc, None, format, false)? {
            files.insert(format!("project/{name}"), bytes);
        }
    }
    let summary = serde_json::to_value(DistributeSummary {
        resources: &plan,
        seed: req.seed,
        annotators: alloc.annotators().collect(),
        loads: alloc.assignments.iter().map(|a| (a.annotator.as_str(), a.load())).collect(),
        reannotations: alloc.assignments.iter().map(|a| (a.annotator.as_str(), a.reannotate_ids.len())).collect(),
        assigned: frame.n_rows() - alloc.leftover_ids.len(),
        leftover: alloc.leftover_ids.len(),
    })?;
    files.insert(SPEC_FILE.to_owned(), json_bytes(&summary));
    Ok(Bundle { files, summary, warnings })
}

// ------------------------------------------------------------------- compile

/// Merges annotator tables into `compiled.csv`.
pub fn run_compile_tables(tables: &[AnnotatorTable], options: &CompileOptions) -> Result<Bundle> {
    let (frame, warnings) = compile(tables, options)?;
    let mut names: Vec<&str> = tables.iter().map(|t| t.name.as_str()).collect();
    names.sort_unstable();
    let summary = json!({
        "rows": frame.n_rows(),
        "annotators": names,
        "reannotated": frame.reannotated_annotators(),
        "columns": frame.columns(),
    });
    let files = BTreeMap::from([(COMPILED_FILE.to_owned(), frame.to_csv_bytes()?)]);
    Ok(Bundle { files, summary, warnings })
}

/// Unpacks a ZIP of annotator CSVs and compiles it.
pub fn run_compile(archive: &[u8], options: &CompileOptions) -> Result<Bundle> {
    let (tables, mut warnings) = unpack_archive(archive)?;
    let mut bundle = run_compile_tables(&tables, options)?;
    warnings.append(&mut bundle.warnings);
    bundle.warnings = warnings;
    Ok(bundle)
}

// -------------------------------------------------------------------- labels

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LabelsRequest {
    #[serde(default)]
    pub annotators: Option<Vec<String>>,
    #[serde(default)]
    pub generator: GeneratorSpec,
    /// Per-annotator weights for the sample labels.
    #[serde(default)]
    pub reliability: Option<BTreeMap<String, f64>>,
    #[serde(default)]
    pub hard_mode: HardMode,
}

/// Adds `<annotator>_prob`, `sample_prob` and `sample_hard` columns. Rows no
/// annotator labelled keep those cells empty.
pub fn run_labels(data: &[u8], req: &LabelsRequest, exec: Execution) -> Result<Bundle> {
    let frame = AnnotationFrame::from_csv_bytes(data, false)?;
    let annotators = annotators_or_inferred(&frame, &req.annotators)?;
    let generator = req.generator.resolve(&frame, &annotators)?;

    let annotated: Vec<usize> = annotated_rows(&frame, &annotators)?;
    let mut warnings = Vec::new();
    if annotated.len() < frame.n_rows() {
        warnings.push(format!("{} rows have no annotations", frame.n_rows() - annotated.len()));
    }
    let subset = frame.select_rows(&annotated);
    let labels = annotation_prob_labels(&subset, &annotators, &generator, exec)?;
    let probs = sample_prob_labels(&labels, req.reliability.as_ref(), exec)?;
    let hard = sample_hard_labels(&labels, Some(&probs), &generator, req.hard_mode, exec)?;
    let mut labelled = subset;
    add_annotation_prob_labels(&mut labelled, &labels)?;
    add_sample_prob_labels(&mut labelled, &probs)?;
    add_sample_hard_labels(&mut labelled, &hard, generator.mapping())?;
    let out = spread_rows(&frame, &labelled, &annotated)?;

    let summary = json!({
        "annotators": annotators,
        "generator": generator.variant(),
        "mapping": generator.mapping(),
        "rows": frame.n_rows(),
        "labelled_rows": annotated.len(),
    });
    let files = BTreeMap::from([(LABELLED_FILE.to_owned(), out.to_csv_bytes()?)]);
    Ok(Bundle { files, summary, warnings })
}

fn annotated_rows(frame: &AnnotationFrame, annotators: &[String]) -> Result<Vec<usize>> {
    let mut cols = Vec::new();
    for a in annotators {
        cols.push(frame.require_column(a)?);
        if let Some(re) = frame.column_index(&reannotation_column(a)) {
            cols.push(re);
        }
    }
    Ok((0..frame.n_rows()).filter(|&r| cols.iter().any(|&c| frame.cell(r, c).is_some())).collect())
}

/// Puts the rows of `subset` (taken from `full` at `rows`) back among the
/// rows of `full`, leaving new columns empty elsewhere.
fn spread_rows(full: &AnnotationFrame, subset: &AnnotationFrame, rows: &[usize]) -> Result<AnnotationFrame> {
    if rows.len() == full.n_rows() {
        return Ok(subset.clone());
    }
    let mut position = vec![None; full.n_rows()];
    for (i, &r) in rows.iter().enumerate() {
        position[r] = Some(i);
    }
    let width = subset.columns().len();
    let base = full.columns().len();
    let out_rows = (0..full.n_rows())
        .map(|r| match position[r] {
            Some(i) => subset.row(i).to_vec(),
            None => {
                let mut row = full.row(r).to_vec();
                row.resize(width, None);
                row
            }
        })
        .collect();
    debug_assert!(width >= base);
    AnnotationFrame::new(subset.columns().to_vec(), out_rows)
}

// --------------------------------------------------------------- reliability

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Output {
    Reliability,
    Graph,
    Graph3d,
    Heatmap,
    GraphJson,
}

impl Output {
    pub const ALL: [Output; 5] = [Output::Reliability, Output::Graph, Output::Graph3d, Output::Heatmap, Output::GraphJson];

    pub fn name(self) -> &'static str {
        match self {
            Output::Reliability => "reliability",
            Output::Graph => "graph",
            Output::Graph3d => "graph3d",
            Output::Heatmap => "heatmap",
            Output::GraphJson => "graph-json",
        }
    }

    /// Parses a comma-separated list such as `reliability,heatmap`.
    pub fn parse_list(s: &str) -> Result<BTreeSet<Output>> {
        s.split(',').map(str::trim).filter(|p| !p.is_empty()).map(Output::from_str).collect()
    }
}

impl FromStr for Output {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Output::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown output {s:?}")))
    }
}

fn all_outputs() -> BTreeSet<Output> {
    Output::ALL.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityRequest {
    #[serde(default)]
    pub annotators: Option<Vec<String>>,
    #[serde(default)]
    pub generator: GeneratorSpec,
    #[serde(default)]
    pub agreement: AgreementConfig,
    #[serde(default)]
    pub reliability: ReliabilityConfig,
    #[serde(default = "all_outputs")]
    pub outputs: BTreeSet<Output>,
    /// Heatmap rows; all annotators when `None`.
    #[serde(default)]
    pub heatmap_annotators: Option<Vec<String>>,
    /// Heatmap columns; all annotators when `None`.
    #[serde(default)]
    pub heatmap_other_annotators: Option<Vec<String>>,
}

impl Default for ReliabilityRequest {
    fn default() -> Self {
        Self {
            annotators: None,
            generator: GeneratorSpec::default(),
            agreement: AgreementConfig::default(),
            reliability: ReliabilityConfig::default(),
            outputs: all_outputs(),
            heatmap_annotators: None,
            heatmap_other_annotators: None,
        }
    }
}

/// Labels, agreement graph and reliabilities for a compiled frame.
pub struct Analysis {
    pub annotators: Vec<String>,
    pub graph: AnnotatorGraph,
    pub report: crate::reliability::ReliabilityReport,
    pub mapping: crate::mapping::LabelMapping,
}

pub fn analyse(frame: &AnnotationFrame, req: &ReliabilityRequest, exec: Execution) -> Result<Analysis> {
    let annotators = annotators_or_inferred(frame, &req.annotators)?;
    let generator = req.generator.resolve(frame, &annotators)?;
    let labels = annotation_prob_labels(frame, &annotators, &generator, exec)?;
    let graph = build_graph(&labels, &req.agreement, exec)?;
    let report = compute_reliability(&graph, &req.reliability)?;
    Ok(Analysis { annotators, graph: report.graph.clone(), report, mapping: generator.mapping().clone() })
}

/// Runs the reliability workflow. The summary holds every requested output,
/// SVG images included, and is what the service returns as its body.
pub fn run_reliability(data: &[u8], req: &ReliabilityRequest, exec: Execution) -> Result<Bundle> {
    let frame = AnnotationFrame::from_csv_bytes(data, false)?;
    let a = analyse(&frame, req, exec)?;
    let mut warnings = a.graph.warnings.clone();
    warnings.dedup();

    let mut summary = serde_json::Map::new();
    let mut files = BTreeMap::new();
    summary.insert(
        "config".into(),
        json!({
            "annotators": a.annotators,
            "generator": req.generator.variant,
            "metric": req.agreement.metric,
            "alpha": req.reliability.alpha,
            "overlap_threshold": req.agreement.overlap_threshold,
            "effective_overlap_threshold": req.agreement.effective_threshold(),
            "outputs": req.outputs.iter().map(|o| o.name()).collect::<Vec<_>>(),
        }),
    );
    summary.insert("mapping".into(), serde_json::to_value(&a.mapping)?);
    let mut images = serde_json::Map::new();
    for output in &req.outputs {
        match output {
            Output::Reliability => {
                summary.insert("reliability".into(), serde_json::to_value(&a.report)?);
            }
            Output::GraphJson => {
                summary.insert("graph".into(), serde_json::to_value(&a.graph)?);
                files.insert("graph.json".to_owned(), json_bytes(&a.graph));
            }
            Output::Graph => {
                let svg = export_graph_2d(&a.graph);
                files.insert("graph.svg".to_owned(), svg.clone().into_bytes());
                images.insert("graph".into(), Value::String(svg));
            }
            Output::Graph3d => {
                let scene = export_graph_3d(&a.graph);
                files.insert("scene3d.json".to_owned(), json_bytes(&scene));
                summary.insert("scene3d".into(), serde_json::to_value(&scene)?);
            }
            Output::Heatmap => {
                let (svg, matrix) = export_heatmap(
                    &a.graph,
                    req.heatmap_annotators.as_deref(),
                    req.heatmap_other_annotators.as_deref(),
                )?;
                files.insert("heatmap.svg".to_owned(), svg.clone().into_bytes());
                files.insert("heatmap.json".to_owned(), json_bytes(&matrix));
                summary.insert("heatmap".into(), serde_json::to_value(&matrix)?);
                images.insert("heatmap".into(), Value::String(svg));
            }
        }
    }
    if !images.is_empty() {
        summary.insert("images".into(), Value::Object(images));
    }
    let summary = Value::Object(summary);
    files.insert(REPORT_FILE.to_owned(), json_bytes(&summary));
    Ok(Bundle { files, summary, warnings })
}

// -------------------------------------------------------------- redistribute

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RedistributeRequest {
    #[serde(default)]
    pub annotators: Option<Vec<String>>,
    /// Most new samples any annotator takes on. Derived from `time`, `rate`
    /// and `re` when absent; unlimited if those are absent too.
    #[serde(default)]
    pub capacity: Option<usize>,
    #[serde(default)]
    pub time: Option<f64>,
    #[serde(default)]
    pub rate: Option<f64>,
    #[serde(default)]
    pub re: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub targets: Targets,
}

impl Default for RedistributeRequest {
    fn default() -> Self {
        Self { annotators: None, capacity: None, time: None, rate: None, re: 0.0, seed: 0, targets: Targets::All }
    }
}

impl RedistributeRequest {
    pub fn effective_capacity(&self) -> Result<usize> {
        if let Some(c) = self.capacity {
            return Ok(c);
        }
        match (self.time, self.rate) {
            (Some(t), Some(rho)) => {
                if !(t > 0.0 && rho > 0.0) || !(0.0..1.0).contains(&self.re) {
                    return Err(Error::InvalidConfig("time and rate must be positive, re in [0, 1)".into()));
                }
                Ok(crate::distribution::floor(t * rho / (1.0 + self.re)))
            }
            (None, None) => Ok(usize::MAX),
            _ => Err(Error::InvalidConfig("capacity needs both time and rate".into())),
        }
    }
}

/// Assigns extra annotators to a compiled frame and exports the new task
/// files. Task files carry the document columns only, never other people's
/// labels.
pub fn run_redistribute(data: &[u8], req: &RedistributeRequest) -> Result<Bundle> {
    let frame = AnnotationFrame::from_csv_bytes(data, false)?;
    let annotators = annotators_or_inferred(&frame, &req.annotators)?;
    let capacity = req.effective_capacity()?;
    let alloc = redistribute(&frame, &annotators, capacity, req.seed, &req.targets)?;
    let documents = document_frame(&frame, &annotators);
    let files = export_allocation(&alloc, &documents)?;
    let summary = redistribute_summary(&alloc, capacity);
    let mut files = files;
    files.insert(SPEC_FILE.to_owned(), json_bytes(&summary));
    Ok(Bundle { files, summary, warnings: Vec::new() })
}

fn document_frame(frame: &AnnotationFrame, annotators: &[String]) -> AnnotationFrame {
    let drop: Vec<&str> = frame
        .columns()
        .iter()
        .filter(|c| {
            is_reserved_column(c) && *c != crate::frame::SAMPLE_ID || annotators.iter().any(|a| a == *c)
        })
        .map(String::as_str)
        .collect();
    frame.without_columns(&drop)
}

fn redistribute_summary(alloc: &Allocation, capacity: usize) -> Value {
    json!({
        "seed": alloc.seed,
        "capacity": (capacity != usize::MAX).then_some(capacity),
        "annotators": alloc.annotators().collect::<Vec<_>>(),
        "loads": alloc.assignments.iter().map(|a| (a.annotator.clone(), a.load())).collect::<BTreeMap<_, _>>(),
        "assigned": alloc.assignments.iter().map(|a| a.load()).sum::<usize>(),
        "untouched": alloc.leftover_ids.len(),
    })
}
