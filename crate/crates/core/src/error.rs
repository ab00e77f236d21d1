use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("instance has no columns")]
    EmptyInstance,

    #[error("column {index} has dimension {found}, expected {expected}")]
    RaggedColumns {
        index: usize,
        expected: usize,
        found: usize,
    },

    #[error("column {0} has zero dimension")]
    ZeroDimension(usize),

    #[error("column {0} has non-finite entries")]
    NonFinite(usize),

    #[error("column {0} is zero and cannot be normalized")]
    ZeroColumn(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid simplex point: {0}")]
    InvalidSimplexPoint(String),

    #[error(
        "exact enumeration budget exceeded ({n} columns > {budget}); use the iterative estimator instead"
    )]
    BudgetExceeded { n: usize, budget: usize },

    #[error("the origin is not in the convex hull of the columns (positive margin case)")]
    OriginNotInHull,

    #[error("grid estimator supports column-space rank <= 3, got {0}")]
    UnsupportedRank(usize),

    #[error("instance columns are not unit norm (column {0})")]
    NotNormalized(usize),

    #[error("linear program too large: {vars} variables, {rows} rows (limit {limit})")]
    LpTooLarge {
        vars: usize,
        rows: usize,
        limit: usize,
    },

    #[error("malformed linear program: {0}")]
    MalformedLp(String),

    #[error("inapplicable: {0}")]
    Inapplicable(String),

    #[error("ill-posed: {0}")]
    IllPosed(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("generation failed: {0}")]
    Generation(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
