use thiserror::Error;

/// Errors surfaced by the linear algebra kernels, selectors, simulator and I/O.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix dimensions {rows}x{cols} are invalid: {reason}")]
    InvalidDimensions {
        rows: usize,
        cols: usize,
        reason: &'static str,
    },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("rank deficient: pivot residual {residual:e} at step {step}")]
    RankDeficient { step: usize, residual: f64 },

    #[error("singular matrix: best pivot magnitude {pivot:e} at column {col}")]
    Singular { col: usize, pivot: f64 },

    #[error("every antenna subset is singular")]
    AllSingular,

    #[error("invalid antenna subset: {0}")]
    InvalidSubset(String),

    #[error("unsupported scheme `{0}`")]
    UnsupportedScheme(String),

    #[error("parse error at line {line}{}: {message}", .column.map(|c| format!(", column {c}")).unwrap_or_default())]
    Parse {
        line: usize,
        column: Option<usize>,
        message: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
