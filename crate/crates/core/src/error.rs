use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("model breakdown: {0}")]
    ModelBreakdown(String),
    #[error("structural error: {0}")]
    Structural(String),
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),
    #[error("infinite Fisher information: {0}")]
    InfiniteFisher(String),
    #[error("threshold violated: {0}")]
    ThresholdViolated(String),
    #[error("no crossing: {0}")]
    NoCrossing(String),
}

pub type Result<T> = std::result::Result<T, Error>;
