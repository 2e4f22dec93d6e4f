use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the pipeline can report.
///
/// [`Error::code`] gives a stable identifier that the CLI maps to exit codes
/// and the HTTP service returns in error bodies.
#[derive(Debug, Error)]
pub enum Error {
    // frame / mapping
    #[error("no non-empty annotation cells among the listed annotator columns")]
    EmptyAnnotations,
    #[error("label values mix numeric and non-numeric forms: {numeric:?} vs {text:?}")]
    MixedTypes { numeric: String, text: String },
    #[error("label mapping needs at least two classes, found {0}")]
    TooFewClasses(usize),
    #[error("invalid label mapping: {0}")]
    InvalidMapping(String),
    #[error("column {0:?} not found")]
    MissingColumn(String),
    #[error("invalid frame: {0}")]
    InvalidFrame(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    // distribution
    #[error("resource spec is overdetermined: {0}")]
    Overdetermined(String),
    #[error("resource spec is underdetermined: {0} unknowns, exactly one allowed")]
    Underdetermined(usize),
    #[error("solved value for {variable} is not positive ({value})")]
    NonPositiveSolution { variable: &'static str, value: f64 },
    #[error("allocation needs {needed} samples but the input has {available}")]
    InsufficientSamples { needed: usize, available: usize },
    #[error("redistribution infeasible for {} sample(s): {}", stuck.len(), stuck.join(", "))]
    Infeasible { stuck: Vec<String> },

    // labels
    #[error("value {raw:?} in row {row} (column {column:?}) is not in the label mapping")]
    UnmappedValue { raw: String, row: usize, column: String },
    #[error("cell {raw:?} in row {row} has more than two choices")]
    TooManyChoices { raw: String, row: usize },
    #[error("sample {0:?} has no annotations")]
    NoAnnotations(String),
    #[error("all annotator weights are zero for sample {0:?}")]
    AllZeroWeights(String),

    // agreement / reliability
    #[error("need at least {needed} shared items, got {got}")]
    InsufficientOverlap { needed: usize, got: usize },
    #[error("metric {metric} cannot be used with {reason}")]
    IncompatibleMetric { metric: String, reason: String },
    #[error("unknown annotator {0:?}")]
    UnknownAnnotator(String),
    #[error("annotator {0:?} has neither agreement edges nor intra-annotator agreement")]
    NoSignal(String),
    #[error("reliability needs at least two annotators, got {0}")]
    TooFewAnnotators(usize),

    // compilation
    #[error("annotator {annotator:?} annotated sample {sample:?} more than twice")]
    TripleAnnotation { annotator: String, sample: String },
    #[error("table {0:?} has no sample_id column")]
    MissingSampleId(String),
    #[error("annotator name {0:?} is claimed by more than one file")]
    AnnotatorCollision(String),
    #[error("conflicting values for sample {sample:?} in column {column:?}")]
    ConflictingCell { sample: String, column: String },
    #[error("corrupt archive: {0}")]
    CorruptArchive(String),
    #[error("archive contains no CSV files")]
    EmptyArchive,
    #[error("unsupported project format {0:?}")]
    UnsupportedFormat(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable name of the error kind.
    pub fn code(&self) -> &'static str {
        match self {
            Error::EmptyAnnotations => "EmptyAnnotations",
            Error::MixedTypes { .. } => "MixedTypes",
            Error::TooFewClasses(_) => "TooFewClasses",
            Error::InvalidMapping(_) => "InvalidMapping",
            Error::MissingColumn(_) => "MissingColumn",
            Error::InvalidFrame(_) => "InvalidFrame",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::Overdetermined(_) => "Overdetermined",
            Error::Underdetermined(_) => "Underdetermined",
            Error::NonPositiveSolution { .. } => "NonPositiveSolution",
            Error::InsufficientSamples { .. } => "InsufficientSamples",
            Error::Infeasible { .. } => "Infeasible",
            Error::UnmappedValue { .. } => "UnmappedValue",
            Error::TooManyChoices { .. } => "TooManyChoices",
            Error::NoAnnotations(_) => "NoAnnotations",
            Error::AllZeroWeights(_) => "AllZeroWeights",
            Error::InsufficientOverlap { .. } => "InsufficientOverlap",
            Error::IncompatibleMetric { .. } => "IncompatibleMetric",
            Error::UnknownAnnotator(_) => "UnknownAnnotator",
            Error::NoSignal(_) => "NoSignal",
            Error::TooFewAnnotators(_) => "TooFewAnnotators",
            Error::TripleAnnotation { .. } => "TripleAnnotation",
            Error::MissingSampleId(_) => "MissingSampleId",
            Error::AnnotatorCollision(_) => "AnnotatorCollision",
            Error::ConflictingCell { .. } => "ConflictingCell",
            Error::CorruptArchive(_) => "CorruptArchive",
            Error::EmptyArchive => "EmptyArchive",
            Error::UnsupportedFormat(_) => "UnsupportedFormat",
            Error::Csv(_) => "Csv",
            Error::Json(_) => "Json",
            Error::Io(_) => "Io",
        }
    }

    /// Process exit status used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) => 1,
            Error::Csv(_) | Error::Json(_) => 3,
            Error::InvalidConfig(_) => 4,
            Error::EmptyAnnotations => 10,
            Error::MixedTypes { .. } => 11,
            Error::TooFewClasses(_) => 12,
            Error::InvalidMapping(_) => 13,
            Error::MissingColumn(_) => 14,
            Error::InvalidFrame(_) => 15,
            Error::Overdetermined(_) => 20,
            Error::Underdetermined(_) => 21,
            Error::NonPositiveSolution { .. } => 22,
            Error::InsufficientSamples { .. } => 23,
            Error::Infeasible { .. } => 24,
            Error::UnmappedValue { .. } => 30,
            Error::TooManyChoices { .. } => 31,
            Error::NoAnnotations(_) => 32,
            Error::AllZeroWeights(_) => 33,
            Error::InsufficientOverlap { .. } => 40,
            Error::IncompatibleMetric { .. } => 41,
            Error::UnknownAnnotator(_) => 42,
            Error::NoSignal(_) => 43,
            Error::TooFewAnnotators(_) => 44,
            Error::TripleAnnotation { .. } => 50,
            Error::MissingSampleId(_) => 51,
            Error::AnnotatorCollision(_) => 52,
            Error::ConflictingCell { .. } => 53,
            Error::CorruptArchive(_) => 54,
            Error::EmptyArchive => 55,
            Error::UnsupportedFormat(_) => 56,
        }
    }
}
