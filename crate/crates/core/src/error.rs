use thiserror::Error;

/// Every failure mode surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid resolution: {0}")]
    InvalidResolution(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("field contains non-finite values")]
    NonFinite,

    #[error("requested {requested} modes but the grid only carries {available}")]
    Capacity { requested: usize, available: usize },

    #[error("spectral basis truncated at mu = {last} does not cover all modes with mu + lambda <= 0 (lambda = {lambda})")]
    InsufficientBasis { lambda: f64, last: f64 },

    #[error("field is not in the positive cone: B(z,z,lambda) = {0}")]
    NotInCone(f64),

    #[error("degenerate Gram determinant D = {0}")]
    GramDegenerate(f64),

    #[error("infeasible Nehari scaling: t^2 = {t2}, s^2 = {s2}")]
    InfeasibleScaling { t2: f64, s2: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("under-resolved: {0}")]
    Resolution(String),

    #[error("sampling failure: {0}")]
    Sampling(String),

    #[error("dimension {0} out of range 1..=4")]
    Dimension(usize),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
