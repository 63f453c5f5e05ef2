use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("not a correlation spectrum: {0}")]
    NotCorrelationSpectrum(String),

    /// `column` is 0-based; the message counts from 1.
    #[error("degenerate data: column {} has zero sample variance", column + 1)]
    ZeroVariance { column: usize },

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("size limit exceeded: {0}")]
    Size(String),

    #[error("replicate {index}: {source}")]
    Replicate {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// True for failures caused by the data itself (constant columns,
    /// vanishing denominators), as opposed to bad arguments.
    pub fn is_degenerate_data(&self) -> bool {
        match self {
            Error::ZeroVariance { .. } | Error::Degenerate(_) => true,
            Error::Replicate { source, .. } => source.is_degenerate_data(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
