use std::path::PathBuf;

use npef_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Failure class, used for the exit code and the error-line prefix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Input,
    Numerical,
    Convergence,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Input => 2,
            ErrorClass::Numerical => 3,
            ErrorClass::Convergence => 4,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            ErrorClass::Input => "input",
            ErrorClass::Numerical => "numerical",
            ErrorClass::Convergence => "convergence",
        }
    }
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Core(e) => match e {
                CoreError::NotConverged { .. } => ErrorClass::Convergence,
                CoreError::NonFinite(_)
                | CoreError::NotBracketed { .. }
                | CoreError::DegenerateCrossValidation
                | CoreError::EssCollapse { .. } => ErrorClass::Numerical,
                _ => ErrorClass::Input,
            },
            _ => ErrorClass::Input,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl std::fmt::Display) -> Self {
        Error::Parse { path: path.into(), message: message.to_string() }
    }
}

/// `error[<class>]: <message>` on a single line.
pub fn error_line(e: &Error) -> String {
    let msg = e.to_string().replace(['\n', '\r'], " ");
    format!("error[{}]: {}", e.class().tag(), msg)
}
