use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension cap exceeded: {requested} entries requested, cap is {cap}")]
    DimensionCap { requested: usize, cap: usize },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("index out of range: {0}")]
    Range(String),

    #[error("invalid generator: {0}")]
    Generator(String),

    #[error("invalid site: {0}")]
    Site(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
