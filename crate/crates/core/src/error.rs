use core::fmt;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Operand shapes do not fit the operation.
    DimensionMismatch { op: &'static str, left: (usize, usize), right: (usize, usize) },
    /// A square matrix was required.
    NotSquare { op: &'static str, rows: usize, cols: usize },
    /// LU factorization hit a pivot below the singularity tolerance.
    Singular { pivot: usize, magnitude: f64, tolerance: f64 },
    /// A computation produced NaN or infinity.
    NonFinite { context: &'static str, index: usize },
    /// The evaluation point lies outside the domain of a model.
    Domain(&'static str),
    /// An argument violated a documented precondition.
    InvalidArgument(&'static str),
    /// A structural property that must hold by construction was violated.
    Invariant(&'static str),
    /// A step of a multi-step computation failed.
    Step { step: usize, source: alloc::boxed::Box<Error> },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { op, left, right } => {
                write!(f, "{op}: dimension mismatch ({}x{} vs {}x{})", left.0, left.1, right.0, right.1)
            }
            Error::NotSquare { op, rows, cols } => {
                write!(f, "{op}: expected a square matrix, got {rows}x{cols}")
            }
            Error::Singular { pivot, magnitude, tolerance } => {
                write!(f, "matrix is singular to tolerance: pivot {pivot} has magnitude {magnitude:e} <= {tolerance:e}")
            }
            Error::NonFinite { context, index } => {
                write!(f, "non-finite value in {context} at index {index}")
            }
            Error::Domain(msg) => write!(f, "outside model domain: {msg}"),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::Invariant(msg) => write!(f, "invariant violated: {msg}"),
            Error::Step { step, source } => write!(f, "step {step}: {source}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
