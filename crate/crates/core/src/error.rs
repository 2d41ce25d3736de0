use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A precondition on an argument value was violated.
    InvalidArgument(String),
    /// Tensor dimensions disagree; the message names the offending tensor.
    Shape(String),
    /// Not enough rows or bars to produce a single output.
    InsufficientData { required: usize, actual: usize, what: &'static str },
    /// An object was used before it was ready, or against the wrong variant.
    InvalidState(String),
    /// A perturbed loss evaluation produced a non-finite value.
    NumericInstability(String),
    /// Training produced a non-finite loss.
    Divergence { epoch: usize, batch: usize },
    /// R² is undefined because the actual values have zero variance.
    DegenerateVariance,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::Shape(msg) => write!(f, "shape mismatch: {msg}"),
            Error::InsufficientData { required, actual, what } => write!(
                f,
                "insufficient data: {what} needs at least {required}, got {actual}"
            ),
            Error::InvalidState(msg) => write!(f, "invalid state: {msg}"),
            Error::NumericInstability(msg) => write!(f, "numeric instability: {msg}"),
            Error::Divergence { epoch, batch } => write!(
                f,
                "training diverged: non-finite loss at epoch {epoch}, batch {batch}"
            ),
            Error::DegenerateVariance => {
                write!(f, "degenerate variance: actual values are constant, R-Square undefined")
            }
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub(crate) fn shape(msg: impl Into<String>) -> Error {
    Error::Shape(msg.into())
}
