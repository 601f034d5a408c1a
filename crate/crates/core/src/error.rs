use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("rating {0} is outside the 1..=9 scale")]
    RatingOutOfRange(i64),
    #[error("unknown channel `{0}`")]
    MissingChannel(String),
    #[error("only one class present: {0}")]
    SingleClass(String),
    #[error("series too short: need at least {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("band [{lo}, {hi}) Hz lies outside the Nyquist range of {nyquist} Hz")]
    BandOutOfRange { lo: f64, hi: f64, nyquist: f64 },
    #[error("field sets differ: {0}")]
    FieldMismatch(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
