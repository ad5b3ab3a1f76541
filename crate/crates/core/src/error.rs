use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape mismatch in {context}: expected {expected}, got {actual}")]
    Shape {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("training diverged at epoch {epoch}")]
    Divergence { epoch: usize },

    /// Deflate was requested on an individual without perturbation blocks.
    #[error("deflate unavailable: individual has no perturbation blocks")]
    DeflateUnavailable,

    #[error("block index {index} out of range for {len} blocks")]
    BlockIndex { index: usize, len: usize },

    /// A semantic cache does not line up with the data it claims to describe.
    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error("ingestion error at row {row}: {message}")]
    Ingestion { row: usize, message: String },

    #[error("model file error at line {line}: {message}")]
    ModelFormat { line: usize, message: String },

    #[error("statistics error: {0}")]
    Stats(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
