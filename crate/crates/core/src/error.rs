use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty cluster has no centroid")]
    EmptyCluster,
    #[error("center set is empty")]
    NoCenters,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("size mismatch: {0}")]
    SizeMismatch(String),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("infeasible constraint: {0}")]
    Infeasible(String),
    #[error("enumeration would visit up to {bound} clusterings, above the cap of {cap}")]
    EnumerationCap { bound: u128, cap: u128 },
    #[error("{0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
