use thiserror::Error;

/// Errors surfaced by the library.
///
/// `Config` marks inconsistencies between components (shape mismatches,
/// unsupported combinations), `Input` marks bad caller-supplied data,
/// `Numeric` marks floating-point breakdowns, and `CapExceeded` marks a
/// refused brute-force computation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("input error: {0}")]
    Input(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("enumeration cap exceeded: {0}")]
    CapExceeded(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
