use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("value {value} outside [-{bound}, {bound}] of the quantization scale")]
    OutsideScale { value: f64, bound: f64 },

    #[error("two-point distribution has mean {mean}, expected the current value {current}")]
    NotUnbiased { mean: f64, current: f64 },

    #[error("site index {index} out of range (layer has {len} sites)")]
    SiteOutOfRange { index: usize, len: usize },

    #[error("layer {layer} has no compressible candidates")]
    EmptyCandidates { layer: usize },

    #[error("invalid layer sets: {0}")]
    LayerSets(String),

    #[error("rows {rows:?} of layer {layer} are not zero; cannot merge their successor columns")]
    RowsNotZero { layer: usize, rows: Vec<usize> },

    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("target at row {row} is not a class index")]
    NonIntegerTarget { row: usize },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("malformed data at row {row}, column {col}: {msg}")]
    Malformed { row: usize, col: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Whether the error stems from numerics (divergence, NaN) rather than
    /// from malformed input.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Divergence { .. } | Error::NonFinite(_))
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
