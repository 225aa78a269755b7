use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A scalar argument is outside its admissible range.
    InvalidParameter { name: &'static str, reason: String },
    /// Two vectors (or a vector and a spectrum) disagree in length.
    DimensionMismatch { expected: usize, found: usize },
    /// The fixed point `sum_i l_i / (l_i + tau) = n` has no positive root (`n >= p`).
    NoSolution { n: usize, p: usize },
    /// The fixed-point solver hit its iteration cap before meeting tolerance.
    NonConvergence { iterations: usize, residual: f64 },
    /// A bound's hypothesis on `(alpha, p, n)` does not hold.
    HypothesisViolated(String),
    /// Derived statistics contradict their own invariants.
    InternalInconsistency(String),
    /// Index outside `0..len`.
    OutOfRange { index: usize, len: usize },
    /// Exhaustive search requested above the enumeration bound.
    TooLarge { p: usize, max: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter { name, reason } => {
                write!(f, "invalid parameter `{name}`: {reason}")
            }
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::NoSolution { n, p } => {
                write!(f, "no positive fixed point for n = {n} >= p = {p}")
            }
            Error::NonConvergence { iterations, residual } => {
                write!(f, "fixed point did not converge after {iterations} iterations (residual {residual:e})")
            }
            Error::HypothesisViolated(msg) => write!(f, "hypothesis violated: {msg}"),
            Error::InternalInconsistency(msg) => write!(f, "internal inconsistency: {msg}"),
            Error::OutOfRange { index, len } => {
                write!(f, "index {index} out of range for length {len}")
            }
            Error::TooLarge { p, max } => {
                write!(f, "p = {p} exceeds the enumeration bound {max}")
            }
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
