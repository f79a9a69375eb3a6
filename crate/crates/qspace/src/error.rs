//! Crate-wide error type.

use thiserror::Error;

/// Errors reported by the quotient-space operations and estimators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("group element of kind {element} is not compatible with action {action}")]
    IncompatibleElement {
        element: &'static str,
        action: &'static str,
    },

    #[error("operation `{op}` requires a finite group, action {action} is not finite")]
    NotFiniteGroup { op: &'static str, action: &'static str },

    #[error("operation `{op}` is not supported for action {action}")]
    UnsupportedAction { op: &'static str, action: &'static str },

    #[error("point is singular (non-trivial isotropy) and the operation is only defined at regular points")]
    SingularPoint,

    #[error("template must be non-zero")]
    ZeroTemplate,

    #[error("template must be a fixed point of the action")]
    TemplateNotFixed,

    #[error("non-finite coordinate at index {index}")]
    NonFiniteCoordinate { index: usize },

    #[error("invalid noise specification: {0}")]
    InvalidNoise(String),

    #[error("noise has zero second moment and cannot be normalized")]
    ZeroEnergyNoise,

    #[error("empty observation list")]
    EmptyObservations,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
