use thiserror::Error;

use crate::space::PointId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown point id {0}")]
    UnknownPoint(PointId),
    #[error("radius must be positive, got {0}")]
    InvalidRadius(f64),
    #[error("exponent p must be at least 1, got {0}")]
    InvalidExponent(f64),
    #[error("p0 must lie in (1, inf), got {0}")]
    InvalidP0(f64),
    #[error("set is empty")]
    EmptySet,
    #[error("function vanishes identically")]
    ZeroFunction,
    #[error("function is not constant on orbits: {0}")]
    NotOrbitConstant(String),
    #[error("point {point} has non-positive mass")]
    NonPositiveMass { point: PointId },
    #[error("explicit construction exceeds the cap of {cap} points")]
    CapExceeded { cap: usize },
    #[error("value does not fit: {0}")]
    Overflow(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid structure: {0}")]
    InvalidStructure(String),
    #[error("space was not built by a generator: {0}")]
    ForeignSpace(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
