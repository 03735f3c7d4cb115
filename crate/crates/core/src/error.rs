use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Dimension mismatch or an invalid dimension request (e.g. n3 >= n2).
    #[error("dimension error: {0}")]
    Dimension(String),

    /// Invalid configuration value.
    #[error("config error: {0}")]
    Config(String),

    /// Dataset file could not be parsed; `line` is 1-based.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// An operation required data that is absent (empty dataset, empty model).
    #[error("{0}")]
    Empty(String),

    /// Requested quantity is undefined for the input (e.g. a single-class
    /// dataset has no cross-label distance).
    #[error("{0}")]
    Undefined(String),

    /// An iterative solver hit its iteration cap before reaching tolerance.
    /// Carries the best primal iterate seen so far.
    #[error("solver did not converge after {iterations} iterations (violation {violation:.3e}, gap {gap:.3e})")]
    NonConverged {
        iterations: usize,
        violation: f64,
        gap: f64,
        best_point: Vec<f64>,
    },

    /// A caller broke an API contract (e.g. utility values outside [0, 1]).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Root finding could not bracket a sign change.
    #[error("bracket failure: {0}")]
    Bracket(String),

    /// Input outside the supported range of a test oracle or harness.
    #[error("refused: {0}")]
    Refused(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
