use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("column `{0}` not found in header")]
    MissingColumn(String),
    #[error("non-numeric value {value:?} at data row {row}, column `{column}`")]
    NonNumericCell {
        row: usize,
        column: String,
        value: String,
    },
    #[error("missing value at data row {row}, column `{column}`")]
    MissingValue { row: usize, column: String },
    #[error("label at data row {row} is a third distinct class: {value:?}")]
    UnknownLabelValue { row: usize, value: String },
    #[error("dataset needs at least {required} rows, found {found}")]
    TooFewRows { required: usize, found: usize },
    #[error("dataset must contain both label classes")]
    SingleClass,
    #[error("dataset has no feature columns")]
    NoFeatures,
    #[error("ragged input: row {row} has {found} values, expected {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("split with ratio {ratio} is degenerate: {reason}")]
    DegenerateSplit { ratio: f64, reason: String },
    #[error("dimension mismatch: expected {expected} columns, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("cannot compute impurity of an empty node")]
    EmptyNode,
    #[error("cannot fit a tree on an empty training set")]
    EmptyTrainingSet,
    #[error("cannot evaluate on an empty sample set")]
    EmptyEvaluationSet,
    #[error("step called on a terminal state")]
    StepOnTerminal,
    #[error("index {index} out of range for {len} states")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("SARSA update for a non-terminal next state needs a next action")]
    MissingNextAction,
    #[error("feature subset is empty")]
    EmptySubset,
    #[error("exhaustive search over {0} features refused (limit is 20)")]
    TooManyFeatures(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown {kind} `{value}`")]
    UnknownVariant { kind: &'static str, value: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
