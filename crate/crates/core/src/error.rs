use std::path::PathBuf;

/// Errors produced anywhere in the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("file not found: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("column `{0}` not present in header")]
    MissingColumn(String),

    #[error("non-numeric cell at row {row}, column `{column}`: {value:?}")]
    NonNumericCell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("malformed csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("non-finite target value at index {0}")]
    NonFiniteTarget(usize),

    #[error("degenerate target range: min = max = {0}")]
    DegenerateTargetRange(f64),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("task mismatch: {0}")]
    TaskMismatch(String),

    #[error("undefined correlation: constant input vector")]
    UndefinedCorrelation,

    #[error("auc undefined: {0}")]
    UndefinedAuc(String),

    #[error("empty weight support")]
    EmptySupport,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported format version {found} (expected {expected})")]
    FormatVersion { expected: u32, found: u32 },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Wrap with a human-readable context (e.g. the sweep value being run).
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// True when the error stems from user data or inputs rather than a bug.
    pub fn is_data_error(&self) -> bool {
        match self {
            Error::Context { source, .. } => source.is_data_error(),
            Error::Io { .. } => false,
            _ => true,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
