use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {}", .0.display())]
    NotFound(PathBuf),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("degenerate triangle(s): {0}")]
    DegenerateTriangle(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("missing field `{0}`")]
    MissingField(String),

    #[error("open mesh: {boundary_edges} boundary edge(s)")]
    OpenMesh { boundary_edges: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("evaluator failed: {0}")]
    Evaluator(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable code, used for `error: <code>: <message>` reporting.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NotFound(_) => "io_not_found",
            Error::Io { .. } => "io_error",
            Error::Parse { .. } => "parse_error",
            Error::IndexOutOfRange(_) => "index_out_of_range",
            Error::DegenerateTriangle(_) => "degenerate_triangle",
            Error::NonFinite(_) => "non_finite",
            Error::MissingField(_) => "missing_field",
            Error::OpenMesh { .. } => "open_mesh",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::Domain(_) => "domain_error",
            Error::Singular(_) => "singular",
            Error::InsufficientData(_) => "insufficient_data",
            Error::Config(_) => "invalid_config",
            Error::Evaluator(_) => "evaluator_failed",
            Error::Json(_) => "json_error",
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::NotFound(path)
        } else {
            Error::Io { path, source }
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
