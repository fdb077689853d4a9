//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HamlatError {
    #[error("dimension mismatch: expected {expected} sites, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("grid too coarse: {0}")]
    Resolution(String),

    #[error("integration failed at step {step} (t = {t}): {detail}")]
    Integration { step: usize, t: f64, detail: String },

    #[error("degenerate measure: noise intensity epsilon must be positive")]
    DegenerateMeasure,

    #[error("unsupported model for this operation: {0}")]
    UnsupportedModel(String),

    #[error("model evaluation failed: {0}")]
    Model(String),

    #[error("optimization failed: {0}")]
    Optimization(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, HamlatError>;
