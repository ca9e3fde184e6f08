use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("resolution mismatch: {left} vs {right}")]
    ResolutionMismatch { left: String, right: String },

    #[error(
        "Poisson right-hand side is not mean-zero: imbalance {imbalance:e} exceeds {tolerance:e}"
    )]
    PoissonImbalance { imbalance: f64, tolerance: f64 },

    #[error("path construction failed at step {step}: {source}")]
    PathStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("value {value} outside tabulated range [{min}, {max}]")]
    OutOfRange { value: f64, min: f64, max: f64 },

    #[error("smoothing width {delta} too large for the collar chart (limit {limit})")]
    DeltaTooLarge { delta: f64, limit: f64 },

    #[error("conformal solve failed: {0}")]
    ConformalFailure(String),

    #[error("root finding did not converge: {0}")]
    NoConvergence(String),
}
