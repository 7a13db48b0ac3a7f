//! Exit-code classification.
//!
//! `0` success, `2` bad input, `3` strategy fault, `4` backend or execution
//! failure.

use std::fmt;
use std::process::ExitCode;

use verisynth::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Input,
    Fault,
    Backend,
}

impl Kind {
    pub fn code(self) -> u8 {
        match self {
            Kind::Input => 2,
            Kind::Fault => 3,
            Kind::Backend => 4,
        }
    }
}

#[derive(Debug)]
pub struct Failure {
    pub kind: Kind,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn input(msg: impl fmt::Display) -> Self {
        Failure {
            kind: Kind::Input,
            error: anyhow::anyhow!("{msg}"),
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.kind.code())
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

fn classify(e: &Error) -> Kind {
    match e {
        Error::Strategy(_) => Kind::Fault,
        Error::Client(_) => Kind::Backend,
        _ => Kind::Input,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            kind: classify(&e),
            error: e.into(),
        }
    }
}

pub type CliResult<T = ()> = Result<T, Failure>;

/// Tags an arbitrary error with an exit kind and a context line.
pub trait Classify<T> {
    fn or_input(self, context: impl fmt::Display) -> CliResult<T>;
    fn or_backend(self, context: impl fmt::Display) -> CliResult<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn or_input(self, context: impl fmt::Display) -> CliResult<T> {
        self.map_err(|e| Failure {
            kind: Kind::Input,
            error: e.into().context(context.to_string()),
        })
    }

    fn or_backend(self, context: impl fmt::Display) -> CliResult<T> {
        self.map_err(|e| Failure {
            kind: Kind::Backend,
            error: e.into().context(context.to_string()),
        })
    }
}
