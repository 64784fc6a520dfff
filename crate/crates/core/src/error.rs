use thiserror::Error;

/// Errors raised by the lattice library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    /// A structural hypothesis on the coefficients or the nonlinearity fails.
    #[error("({hypothesis}) violated at n={node}: {detail}")]
    HypothesisViolation {
        hypothesis: &'static str,
        node: i64,
        detail: String,
    },

    #[error("spectral gap error: eigenvalue {eigenvalue:e} at index {index} is numerically zero")]
    SpectralGap { index: usize, eigenvalue: f64 },

    #[error("numerical error: {0}")]
    Numerical(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
