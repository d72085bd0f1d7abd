use thiserror::Error;

use crate::lp::LpError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("size cap exceeded: {0}")]
    Cap(String),
    #[error("numeric mode mismatch: {0}")]
    ModeMismatch(String),
    #[error("invalid box: {0}")]
    InvalidBox(String),
    #[error("box is signalling: marginal discrepancy {discrepancy:e} on parties {parties:?} exceeds {tolerance:e}")]
    Signalling {
        discrepancy: f64,
        parties: Vec<usize>,
        tolerance: f64,
    },
    #[error("invalid weights: {0}")]
    Weights(String),
    #[error("invalid relabeling: {0}")]
    Relabeling(String),
    #[error("invalid partition: {0}")]
    Partition(String),
    #[error("zero-probability branch: {0}")]
    ZeroProbability(String),
    #[error("invalid wiring: {0}")]
    Wiring(String),
    #[error("invalid protocol: {0}")]
    Protocol(String),
    #[error("invalid functional: {0}")]
    Functional(String),
    #[error("invalid certificate: {0}")]
    Certificate(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
