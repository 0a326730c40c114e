use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("exponent ({a}, {b}) out of range for a {l}x{m} torus")]
    ExponentOutOfRange { a: usize, b: usize, l: usize, m: usize },

    #[error("polynomial term lists differ in size: A has {a}, B has {b}")]
    TermCountMismatch { a: usize, b: usize },

    #[error("invalid polynomial: {0}")]
    InvalidPolynomial(String),

    #[error("invalid noise specification: {0}")]
    InvalidNoise(String),

    #[error("invalid decoder configuration: {0}")]
    InvalidConfig(String),

    #[error("syndrome is trivial (no defects)")]
    TrivialSyndrome,

    #[error("classifier input contains a single class")]
    SingleClass,

    #[error("need at least {needed} usable points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("unknown code `{0}`")]
    UnknownCode(String),

    #[error("unknown table `{0}`")]
    UnknownTable(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
