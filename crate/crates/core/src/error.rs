//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A column required by the schema is absent from the input.
    #[error("schema error: missing required column `{0}`")]
    Schema(String),

    /// A cell failed to parse as a real number. Rows are 1-based data rows
    /// (the header is row 0).
    #[error("parse error at row {row}, column `{column}`: {value:?} is not a number")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },

    /// The input contains no data rows.
    #[error("empty data: input contains no rows")]
    EmptyData,

    /// Fewer rows than the operation requires.
    #[error("insufficient data: need at least {needed} rows, got {got}")]
    InsufficientData { needed: usize, got: usize },

    /// Summary statistics violate their own ordering invariants.
    #[error("invalid stats for column `{column}`: {reason}")]
    InvalidStats { column: String, reason: String },

    /// A non-finite value where finite reals are required.
    #[error("non-finite value at row {row}, column `{column}`")]
    NonFinite { row: usize, column: String },

    /// Vector or matrix dimensions disagree.
    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    /// Hessian sum plus lambda is non-positive, so the leaf weight is undefined.
    #[error("degenerate leaf: hessian sum plus lambda must be positive")]
    DegenerateLeaf,

    /// An invalid parameter combination.
    #[error("config error: {0}")]
    Config(String),

    /// Training produced a non-finite loss.
    #[error("divergence: non-finite loss at epoch {epoch}")]
    Divergence { epoch: usize },

    /// The requested metric is undefined for this input.
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    /// Attribution was requested for a model without a tree structure.
    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    /// Exact subset enumeration is limited to small feature counts.
    #[error("too many features: {got} exceeds the exact-enumeration limit of {max}")]
    TooManyFeatures { got: usize, max: usize },

    /// A feature name that does not exist in the dataset.
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),

    /// Every random-search trial failed.
    #[error("search failed: {0}")]
    SearchFailed(String),

    /// A cross-validation fold failed; carries the originating error.
    #[error("fold {index} failed: {source}")]
    Fold {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
