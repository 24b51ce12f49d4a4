use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters for {family}: {reason}")]
    InvalidParameter { family: &'static str, reason: String },

    #[error("value {value} outside the admissible range ({lo}, {hi})")]
    Domain { value: f64, lo: f64, hi: f64 },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("entropy is not superlinear (F'_inf = {0}); the energy form needs F'_inf = +inf")]
    NotSuperlinear(f64),

    #[error("descent is infeasible: every starting plan has infinite energy")]
    Infeasible,

    #[error("search failed: {0}")]
    SearchFailed(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
