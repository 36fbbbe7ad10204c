use thiserror::Error;

/// Errors surfaced by the toolkit. Verification failures are not errors;
/// they are reported as data.
#[derive(Debug, Error)]
pub enum Error {
    #[error("vertex {vertex} out of range for graph with {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("color {color} out of range 1..={k}")]
    ColorOutOfRange { color: u32, k: u32 },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("labelings are not neighboring: they differ at {0} vertices")]
    NotNeighboring(usize),

    #[error("graph generation failed after {budget} attempts: {reason}")]
    GenerationFailed { budget: usize, reason: String },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
