use std::fmt;
use std::process::ExitCode;

use motornet::Error;

/// Failure classes with distinct exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Config,
    Data,
    Numeric,
}

impl Kind {
    pub fn exit_code(self) -> ExitCode {
        ExitCode::from(match self {
            Kind::Config => 2,
            Kind::Data => 3,
            Kind::Numeric => 4,
        })
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub error: anyhow::Error,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

impl CliError {
    pub fn context(mut self, msg: impl fmt::Display + Send + Sync + 'static) -> Self {
        self.error = self.error.context(msg);
        self
    }
}

pub fn config(error: impl Into<anyhow::Error>) -> CliError {
    CliError { kind: Kind::Config, error: error.into() }
}

pub fn data(error: impl Into<anyhow::Error>) -> CliError {
    CliError { kind: Kind::Data, error: error.into() }
}

/// Classifies a core error by its origin.
pub fn classify(e: Error) -> CliError {
    let kind = match &e {
        Error::SpecParse { .. } | Error::Spec(_) | Error::Build { .. } => Kind::Config,
        Error::Numeric(_) => Kind::Numeric,
        // arguments are checked up front, so a late rejection is about the data
        Error::InvalidArgument(_) | Error::Shape(_) | Error::Format(_) | Error::Io(_) => Kind::Data,
    };
    CliError { kind, error: e.into() }
}

pub trait Context<T> {
    fn kind(self, kind: Kind, what: impl FnOnce() -> String) -> Result<T, CliError>;
}

impl<T, E: Into<anyhow::Error>> Context<T> for Result<T, E> {
    fn kind(self, kind: Kind, what: impl FnOnce() -> String) -> Result<T, CliError> {
        self.map_err(|e| CliError { kind, error: e.into().context(what()) })
    }
}

pub type CliResult<T> = Result<T, CliError>;
