use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (max asymmetry {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),

    #[error("state is not normalized (trace {0:.12})")]
    NotNormalized(f64),

    #[error("non-finite entry in matrix")]
    NonFinite,

    #[error("subsystem index {index} out of range for {count} subsystems")]
    IndexOutOfRange { index: usize, count: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("ancilla weight 2^{0} is not an integer")]
    NonIntegerAncilla(f64),

    #[error("linear program failed: {0}")]
    Lp(String),

    #[error("semidefinite program failed: {0}")]
    Sdp(String),

    #[error("consistency check failed: {0}")]
    Consistency(String),

    #[error("parse error in field `{field}`: {message}")]
    Parse { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by malformed input documents rather than by the
    /// mathematics of a well-formed request.
    pub fn is_parse_error(&self) -> bool {
        matches!(self, Error::Parse { .. } | Error::Io(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
