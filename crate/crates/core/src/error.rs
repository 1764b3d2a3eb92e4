use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown catalog algebra `{0}`")]
    UnknownAlgebra(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("malformed algebra: {0}")]
    MalformedAlgebra(String),
    #[error("not a Heisenberg algebra in standard form: {0}")]
    NotHeisenberg(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("resource guard: {0}")]
    ResourceGuard(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
