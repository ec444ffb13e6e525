use thiserror::Error;

/// Library-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("domain violation: {0}")]
    DomainViolation(String),

    /// The positive-definiteness assumption on ∇²(f+F) failed (nonpositive
    /// pivot, negative curvature where convexity was required, ...).
    #[error("assumption violation: {0}")]
    AssumptionViolation(String),

    /// A randomized estimator did not meet its certificate within budget.
    #[error("estimator did not converge: {0}")]
    EstimatorFailure(String),

    #[error("diagnostic failure: {0}")]
    Diagnostic(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("malformed instance file: {0}")]
    MalformedInstance(String),
}

pub type Result<T> = std::result::Result<T, Error>;
