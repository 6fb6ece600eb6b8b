use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter or configuration value is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An operation requires a non-empty sample.
    #[error("empty sample")]
    EmptySample,

    /// The computation is statistically degenerate (e.g. constant output, so
    /// the CTE difference in the index denominator vanishes).
    #[error("degenerate output: {0}")]
    DegenerateOutput(String),

    /// Adaptive quadrature did not reach the requested tolerance.
    #[error("quadrature did not converge: {0}")]
    QuadratureFailure(String),

    /// A replication study was requested for a model without an analytic
    /// reference value.
    #[error("no analytic truth available for model {0}")]
    NoAnalyticTruth(String),
}

pub type Result<T> = std::result::Result<T, Error>;
