use thiserror::Error;

/// Errors raised by matrix construction, code construction and analytics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("entry ({row}, {col}) is negative: {value}")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("entries sum to {sum}, expected 1")]
    NotNormalized { sum: f64 },

    #[error("malformed matrix: {0}")]
    Shape(String),

    #[error("value {value} outside of {range}")]
    OutOfRange { value: f64, range: &'static str },

    #[error("r_{row}{col} > 0 where p_{row}{col} = 0")]
    SupportViolation { row: usize, col: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("block masses sum to {total}, expected 1")]
    Mass { total: f64 },

    #[error("cannot round block compositions to integers summing to {d}")]
    RoundingInfeasible { d: usize },

    #[error("bucket count overflow: {0}")]
    Overflow(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error("invalid descriptor: {0}")]
    Descriptor(String),
}

pub type Result<T> = std::result::Result<T, Error>;
