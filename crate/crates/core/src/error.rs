use thiserror::Error;

/// Errors produced anywhere in the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A mode index is out of range, repeated, or two operators act on
    /// incompatible mode sets.
    #[error("wiring error: {0}")]
    Wiring(String),

    /// An operator fails its defining membership test (symplecticity or
    /// complete positivity).
    #[error("invalid operator: {0}")]
    InvalidOperator(String),

    #[error("numerical conditioning error: {0}")]
    Numerical(String),

    #[error("syntax error at {line}:{column}: {message} (expected {expected})")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
        expected: String,
    },

    #[error("semantic error at line {line}: {message}")]
    Semantic { line: usize, message: String },

    /// The Gaussian engine was asked to execute an element outside the
    /// Gaussian CP class.
    #[error("refused to execute {node} on the gaussian engine: {reason}")]
    Refusal { node: String, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(name: &str, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be finite")))
    }
}
