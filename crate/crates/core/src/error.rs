use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite entry encountered in {context}")]
    NonFinite { context: &'static str },

    #[error("covariance eigenvalue {index} is negative ({value})")]
    NegativeEigenvalue { index: usize, value: f64 },

    #[error("transition matrix is not row-stochastic: row {row} sums to {sum}")]
    NonStochastic { row: usize, sum: f64 },

    #[error("distribution is not stationary for the transition matrix (residual {residual:e})")]
    NotStationary { residual: f64 },

    #[error("grid too coarse for mollifier width 1/{level}: {detail}")]
    GridTooCoarse { level: usize, detail: String },

    #[error("grid misalignment: {detail}")]
    GridMisalignment { detail: String },

    #[error("paths live on different grids")]
    GridMismatch,

    #[error("state norm exceeded blow-up guard ({guard:e}) at node {node}")]
    BlowUp { node: usize, guard: f64 },

    #[error("config error: {field}: {message}")]
    Config { field: String, message: String },

    #[error("rate estimation needs >= {needed} positive error levels, got {got}")]
    DegenerateRateInput { needed: usize, got: usize },

    #[error("scenario failed: {0}")]
    ScenarioFailure(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(field: &str, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
