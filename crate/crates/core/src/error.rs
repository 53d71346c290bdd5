use thiserror::Error;

/// Errors raised by sequence generation, bounding, propagation and the adaptive driver.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid sequence spec: {0}")]
    InvalidSpec(String),

    #[error("requested {requested} points but the sequence supports at most {limit}")]
    Capacity { requested: u64, limit: u64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("integrand returned non-finite value {value} for mean index {mean_index:?} at point {point_index}")]
    IntegrandEvaluation {
        mean_index: Vec<usize>,
        point_index: u64,
        value: f64,
    },

    #[error("insufficient data: need at least {needed}, have {have}")]
    InsufficientData { needed: u64, have: u64 },

    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("bound propagation failed at QOI index {qoi_index:?}: {message}")]
    Propagation {
        qoi_index: Vec<usize>,
        message: String,
    },

    #[error("dependency structure error: {0}")]
    DependencyStructure(String),

    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    Shape {
        expected: Vec<usize>,
        actual: Vec<usize>,
    },

    #[error("error metric evaluation failed: {0}")]
    MetricEvaluation(String),

    #[error("no estimate available for unbounded interval [{lo}, {hi}]")]
    NoEstimate { lo: f64, hi: f64 },

    #[error("cost accounting mismatch: {0}")]
    Accounting(String),
}

pub type Result<T> = std::result::Result<T, Error>;
