use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("label column not found: {0:?}")]
    MissingLabelColumn(String),

    #[error("line {line}: expected {expected} fields, found {found}")]
    Arity {
        line: u64,
        expected: usize,
        found: usize,
    },

    #[error("duplicate feature column {0:?}")]
    DuplicateFeature(String),

    #[error("no common features between datasets")]
    NoCommonFeatures,

    #[error("empty dataset: {0}")]
    Empty(String),

    #[error("unknown feature {0:?}")]
    UnknownFeature(String),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("unknown label {0:?}")]
    UnknownLabel(String),

    #[error("training set has a single class {0:?}")]
    SingleClass(String),

    #[error("{family} supports binary problems only, got {classes} classes")]
    NotBinary { family: &'static str, classes: usize },

    #[error(
        "benign:malicious ratio {requested} is unattainable by shrinking the benign class; \
         achievable ratio is at most {achievable}"
    )]
    UnattainableRatio { requested: f64, achievable: f64 },

    #[error("class {label:?} has {count} records, fewer than {needed}")]
    ClassTooSmall {
        label: String,
        count: usize,
        needed: usize,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    Dimension { expected: usize, found: usize },

    #[error("probability: {0}")]
    Probability(String),

    #[error("every grid cell failed; first error: {0}")]
    AllCellsFailed(String),

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("config: {0}")]
    Config(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("stage {stage} failed ({input}): {source}")]
    Stage {
        stage: &'static str,
        input: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
