use thiserror::Error;

/// Error type shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside its admissible range.
    #[error("range error: {0}")]
    Range(String),
    /// A set or point lies outside the domain of a density.
    #[error("domain error: {0}")]
    Domain(String),
    /// Input data failed structural validation.
    #[error("validation error: {0}")]
    Validation(String),
    /// A sign change or zero could not be isolated at the configured
    /// resolution; signals a discontinuous or miscalibrated function.
    #[error("numerical resolution error: {0}")]
    Resolution(String),
    /// A configured size or depth cap was exceeded.
    #[error("capacity error: {0}")]
    Capacity(String),
    /// A space oracle returned a set violating its contract.
    #[error("oracle contract error: {0}")]
    Oracle(String),
    /// Evaluation was requested beyond the covered horizon of a finite
    /// truncation.
    #[error("horizon error: {0}")]
    Horizon(String),
    /// Malformed input file.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
