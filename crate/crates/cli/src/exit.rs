use std::fmt;

use tscf_core::Error;

/// An error carrying the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub error: anyhow::Error,
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Bad input, configuration or I/O.
pub const EXIT_INPUT: i32 = 2;
/// No unlike neighbor exists for a query.
pub const EXIT_NO_NUN: i32 = 3;
/// Any other failure during a run.
pub const EXIT_RUNTIME: i32 = 1;

impl CliError {
    pub fn input(error: impl Into<anyhow::Error>) -> Self {
        Self {
            code: EXIT_INPUT,
            error: error.into(),
        }
    }

    pub fn runtime(error: impl Into<anyhow::Error>) -> Self {
        Self {
            code: EXIT_RUNTIME,
            error: error.into(),
        }
    }

    pub fn context(self, msg: impl fmt::Display + Send + Sync + 'static) -> Self {
        Self {
            code: self.code,
            error: self.error.context(msg),
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NoUnlikeNeighbor => EXIT_NO_NUN,
        Error::DimensionMismatch { .. }
        | Error::OutOfBounds(_)
        | Error::InvalidValue(_)
        | Error::UnknownModelType(_)
        | Error::VersionMismatch { .. }
        | Error::CorruptFile(_)
        | Error::InvalidConfig(_)
        | Error::EmptyClass(_)
        | Error::DegenerateData(_)
        | Error::Io(_) => EXIT_INPUT,
        _ => EXIT_RUNTIME,
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self {
            code: exit_code(&e),
            error: e.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}
