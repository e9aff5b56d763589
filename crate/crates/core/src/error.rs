use thiserror::Error;

/// Errors raised by the library. Each variant belongs to one of the stable
/// exit-code classes used by the command-line front-end.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid parameter: {0}")]
    Invalid(String),

    #[error("{what} needs {needed} work units, cap is {cap}; {hint}")]
    CapExceeded {
        what: &'static str,
        needed: u128,
        cap: u128,
        hint: &'static str,
    },

    #[error("search failed after {attempts} attempts: wanted distance {target}, best found {best}")]
    SearchFailed {
        attempts: usize,
        target: usize,
        best: usize,
    },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// Process exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DimensionMismatch { .. } | Error::Invalid(_) | Error::Parse(_) => 2,
            Error::CapExceeded { .. } => 3,
            Error::SearchFailed { .. } => 4,
            Error::Io(_) => 1,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            found,
        })
    }
}
