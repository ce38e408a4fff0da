use thiserror::Error;

/// Errors raised by the workbench. Variants group by the exit class the
/// command-line harness maps them to.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid size: {0}")]
    InvalidSize(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("resource bound exceeded: {0}")]
    Resource(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("synthesis failed: {0}")]
    Synthesis(String),
    #[error("cannot normalize circuit: {0}")]
    Normalization(String),
    #[error("problem family mismatch: {0}")]
    FamilyMismatch(String),
    #[error("embedding failed: {0}")]
    Embedding(String),
    #[error("routing failed: {0}")]
    Routing(String),
    #[error("ill-posed readout correction on qubit {qubit}: p0 + p1 = {sum} >= 1")]
    IllPosedCorrection { qubit: usize, sum: f64 },
    #[error("invalid circuit structure: {0}")]
    Structural(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("fit failed: {0}")]
    Fit(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
