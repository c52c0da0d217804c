use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("block index {q} outside [{min}, {max}]")]
    BlockIndex { q: i32, min: i32, max: i32 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A documented precondition of an operation was violated.
    #[error("contract violated: {0}")]
    Contract(String),

    /// An input lies outside the domain of a map (e.g. nonpositive density).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("vacuum guard tripped at t = {t}: min sound speed {min_speed} < {threshold}")]
    Vacuum {
        t: f64,
        min_speed: f64,
        threshold: f64,
    },

    #[error("non-finite value detected: {0}")]
    NonFinite(String),

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
