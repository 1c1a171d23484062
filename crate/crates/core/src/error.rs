use thiserror::Error;

pub type Result<T> = std::result::Result<T, TfdError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TfdError {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("dimension {dim} exceeds the configured maximum {max}")]
    Dimension { dim: usize, max: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("truncation error: {0}")]
    Truncation(String),

    #[error("consistency check failed: {what} (deviation {deviation:e}, tolerance {tolerance:e})")]
    Consistency {
        what: String,
        deviation: f64,
        tolerance: f64,
    },

    #[error("Mandel Q undefined for vanishing mean (mean {mean:e}, <n^2 - n> {second_factorial:e})")]
    UndefinedMandel { mean: f64, second_factorial: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for TfdError {
    fn from(e: std::io::Error) -> Self {
        TfdError::Io(e.to_string())
    }
}
