use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not a prime")]
    NotPrime(u32),
    #[error("{0} is not a prime power")]
    NotPrimePower(u32),
    #[error("size {what} exceeds the supported limit of {limit}")]
    TooLarge { what: String, limit: u64 },
    #[error("element {element} is out of range for GF({q})")]
    ElementOutOfRange { element: u32, q: u32 },
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("malformed input at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("no configured source produces matrices of length {0}")]
    NoSourceForLength(usize),
    #[error("decoding failed after {iterations} flips (syndrome weight {syndrome_weight})")]
    DecodeFailure {
        iterations: usize,
        syndrome_weight: usize,
    },
    #[error("internal error: {0}")]
    Internal(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
