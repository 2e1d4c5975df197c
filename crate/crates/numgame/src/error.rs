//! Error types shared across the crate.

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by space construction, inference, evaluation, fitting,
/// dataset I/O, and the LLM harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain bound {0}: domain_max must be at least 1")]
    InvalidDomain(i64),

    #[error("target {target} outside domain 1..={domain_max}")]
    InvalidTarget { target: i64, domain_max: u32 },

    #[error("parameter {name}={value} outside [0, 1]")]
    ParameterOutOfRange { name: &'static str, value: f64 },

    #[error("rule registry is empty")]
    EmptyRegistry,

    #[error("prior has empty support: {0}")]
    EmptySupport(String),

    #[error(
        "zero evidence: no hypothesis with positive prior mass is consistent \
         with the examples; consider alpha < 1 to allow noisy generation"
    )]
    ZeroEvidence,

    #[error("vector length mismatch: {left} vs {right}")]
    ShapeMismatch { left: usize, right: usize },

    #[error("negative entry {value} at index {index}: probabilities must be nonnegative")]
    NegativeEntry { index: usize, value: f64 },

    #[error("no overlapping set ids between agents '{a}' and '{b}'")]
    NoOverlap { a: String, b: String },

    #[error("validation failed ({context}): {message}")]
    Validation { context: String, message: String },

    #[error("parse error in {path} ({location}): {message}")]
    Parse {
        path: String,
        location: String,
        message: String,
    },

    #[error("duplicate cell ({set_id}, target {target})")]
    DuplicateCell { set_id: String, target: u32 },

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("prompt template error: {0}")]
    Template(String),

    #[error("authentication failed: {0}")]
    Auth(String),

    #[error("http request failed after {attempts} attempt(s): {message}")]
    Http { attempts: u32, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Coarse classification used to map errors to process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad inputs: invalid flags, schema violations, out-of-range values.
    Validation,
    /// The computation itself failed (e.g. zero evidence).
    Computation,
    /// Filesystem or network failure.
    Io,
}

impl Error {
    /// Classify this error for exit-code purposes.
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            InvalidDomain(_)
            | InvalidTarget { .. }
            | ParameterOutOfRange { .. }
            | EmptyRegistry
            | ShapeMismatch { .. }
            | NegativeEntry { .. }
            | NoOverlap { .. }
            | Validation { .. }
            | Parse { .. }
            | DuplicateCell { .. }
            | Template(_) => ErrorClass::Validation,
            EmptySupport(_) | ZeroEvidence | Capacity(_) => ErrorClass::Computation,
            Auth(_) | Http { .. } | Io { .. } | Json(_) | Csv(_) => ErrorClass::Io,
        }
    }

    /// Helper for building validation errors.
    pub fn validation(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            context: context.into(),
            message: message.into(),
        }
    }

    /// Helper for wrapping an I/O error with the offending path.
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
