use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("series has no valuation (it is zero within its precision)")]
    NoValuation,
    #[error("not invertible: {0}")]
    NotInvertible(String),
    #[error("not dressable: {0}")]
    NotDressable(String),
    #[error("flow inconsistency: {0}")]
    FlowInconsistency(String),
    #[error("internal consistency: {0}")]
    Consistency(String),
    #[error("point is not in the big cell: {0}")]
    NotTransversal(String),
    #[error("window too small: {0}")]
    WindowTooSmall(String),
    #[error("geometry: {0}")]
    Geometry(String),
    #[error("serialization: {0}")]
    Serde(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}
