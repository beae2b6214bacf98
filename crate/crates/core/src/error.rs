use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = FefiError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum FefiError {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("feature column {column} has zero variance")]
    DegenerateFeature { column: usize },

    #[error("H-statistic is indeterminate: joint partial dependence has no variance")]
    IndeterminateH,

    #[error("training is degenerate: {0}")]
    TrainingDegenerate(String),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: String, actual: String },

    #[error("{method} importance is not supported for {model} models")]
    UnsupportedMethod { method: String, model: String },

    #[error("coverage error: {0}")]
    Coverage(String),

    #[error("inference input error: {0}")]
    InferenceInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<FefiError>,
    },
}

impl FefiError {
    pub fn shape(expected: impl ToString, actual: impl ToString) -> Self {
        FefiError::Shape {
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        FefiError::Io {
            path: path.into(),
            source,
        }
    }

    /// Wraps the error with a provenance label such as `dataset 2, seed 7, stage rules`.
    pub fn context(self, context: impl Into<String>) -> Self {
        FefiError::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// The innermost error, skipping any provenance wrappers.
    pub fn root(&self) -> &FefiError {
        match self {
            FefiError::Context { source, .. } => source.root(),
            other => other,
        }
    }

    pub fn is_config_error(&self) -> bool {
        matches!(self.root(), FefiError::Config(_) | FefiError::Parameter(_))
    }
}

pub(crate) trait ResultExt<T> {
    fn context_with<F: FnOnce() -> String>(self, f: F) -> Result<T>;
}

impl<T> ResultExt<T> for Result<T> {
    fn context_with<F: FnOnce() -> String>(self, f: F) -> Result<T> {
        self.map_err(|e| e.context(f()))
    }
}
