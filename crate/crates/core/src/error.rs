use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A scalar function was asked to act on an eigenvalue outside its guard.
    #[error("singular operator function: eigenvalue {eigenvalue:.6e} lies outside the allowed domain {domain}")]
    Singularity { eigenvalue: f64, domain: String },

    /// A numerical routine failed to meet its accuracy contract.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Photon-sector labeling could not produce a requested sector.
    #[error("sector labeling failed: {0}")]
    Labeling(String),

    /// A precondition on the inputs was not met.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A requested truncation exceeds the memory cap.
    #[error("resource limit: {0}")]
    Resource(String),

    /// A configuration file could not be parsed.
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
