use thiserror::Error;

/// Errors produced by the inference library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("all mixture components have zero weight")]
    DegenerateWeights,

    #[error("system generation failed: {0}")]
    Generation(String),

    #[error("split does not fit: {0}")]
    Split(String),

    #[error("non-finite score {score} at tau = {tau}")]
    Optimization { tau: f64, score: f64 },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
