use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConicError {
    #[error("program has no variables or no constraints")]
    Empty,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("program data contains non-finite values")]
    NonFinite,
    #[error("invalid settings: {0}")]
    Settings(String),
    #[error("KKT factorization failed: {0}")]
    Factorization(String),
    #[error("malformed program JSON: {0}")]
    Json(#[from] serde_json::Error),
}
