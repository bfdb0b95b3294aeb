use thiserror::Error;

/// Errors surfaced by the solver library.
#[derive(Debug, Error)]
pub enum EccdError {
    /// An argument fell outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A data file could not be parsed; `line` is 1-based.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Array shapes or sizes do not line up.
    #[error("dimension error: {0}")]
    Dimension(String),

    /// A configuration value is invalid or inconsistent.
    #[error("config error: {0}")]
    Config(String),

    /// The intercept update lost all curvature (total weight ~ 0).
    #[error("saturation error: {0}")]
    Saturation(String),

    /// A numerical invariant failed (non-finite value, non-positive curvature).
    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, EccdError>;

impl EccdError {
    pub fn parse(line: usize, msg: impl Into<String>) -> Self {
        EccdError::Parse { line, msg: msg.into() }
    }
}
