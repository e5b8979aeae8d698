use thiserror::Error;

/// Errors surfaced by group construction, field evaluation and quadrature.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid group data: {0}")]
    InvalidGroup(String),

    #[error("evaluation at a pole of a group element (z = {z:?})")]
    Pole { z: (f64, f64) },

    #[error("Schwarzian requested at a critical point (f'(z) = 0)")]
    CriticalPoint,

    #[error("bad basepoint: {0}")]
    BadBasepoint(String),

    #[error("field error: {0}")]
    Field(String),

    #[error("quadrature failed to converge: {0}")]
    Quadrature(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
