use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("estimator needs more than k = {k} instances, got {n}")]
    TooFewInstances { n: usize, k: usize },

    #[error("non-finite value at position {index}: {value}")]
    NonFinite { index: usize, value: f64 },

    #[error("empty feature vector")]
    EmptyFeature,

    #[error("digamma domain error: x = {0} (requires x > 0)")]
    DigammaDomain(f64),

    #[error("constant feature (zero range)")]
    ConstantFeature,

    #[error("baseline MI estimate not positive ({0:.6}); feature is degenerate")]
    DegenerateBaseline(f64),

    #[error("baseline psi must be positive, got {0:.6}")]
    NonPositivePsi(f64),

    #[error("degenerate redundant feature: constant output")]
    DegenerateRf,

    #[error("s-expression parse error at byte {pos}: {msg}")]
    SexprParse { pos: usize, msg: String },

    #[error("{path}: {msg}")]
    DatasetFormat { path: String, msg: String },

    #[error("{path}:{row}: {msg}")]
    DatasetParse { path: String, row: usize, msg: String },

    #[error("unknown column: {0}")]
    UnknownColumn(String),

    #[error("labels required: {0}")]
    MissingLabels(String),

    #[error("class '{0}' has no training instances")]
    EmptyClass(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("evolution run failed for feature {feature}: {msg}")]
    RunFailure { feature: String, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
