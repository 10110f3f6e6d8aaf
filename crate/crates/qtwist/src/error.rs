use thiserror::Error;

/// Typed failures shared by every module of the crate.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("branch error: {0}")]
    Branch(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("precision error: {message}; retry with at least {suggested_bits} working bits")]
    Precision { message: String, suggested_bits: u32 },
    #[error("accuracy error: {message} (achieved {achieved:e})")]
    Accuracy { message: String, achieved: f64 },
    #[error("solver error: {0}")]
    Solver(String),
    #[error("degenerate Hessian: {0}")]
    Degenerate(String),
    #[error("inconsistency: {0}")]
    Inconsistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;
