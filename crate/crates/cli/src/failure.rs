use std::fmt;

use loosetree::Error;

/// A command failure together with its exit code.
#[derive(Debug)]
pub enum Failure {
    Io(String),
    Invalid(String),
    Audit(String),
    Pipeline(String),
    Counterexample(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Io(_) => 1,
            Failure::Invalid(_) => 2,
            Failure::Audit(_) => 3,
            Failure::Pipeline(_) => 4,
            Failure::Counterexample(_) => 5,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (tag, msg) = match self {
            Failure::Io(m) => ("i/o error", m),
            Failure::Invalid(m) => ("invalid instance", m),
            Failure::Audit(m) => ("audit failure", m),
            Failure::Pipeline(m) => ("pipeline failure", m),
            Failure::Counterexample(m) => ("counterexample found", m),
        };
        write!(f, "{tag}: {msg}")
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Io(_) => Failure::Io(msg),
            Error::InvalidArgument(_)
            | Error::UnknownVertex(_)
            | Error::InvalidTree(_)
            | Error::Parse { .. }
            | Error::SchemaVersion(_)
            | Error::DegreeViolation { .. } => Failure::Invalid(msg),
            Error::DichotomyFailure { .. } => Failure::Counterexample(msg),
            _ => Failure::Pipeline(msg),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

pub type Outcome<T = ()> = std::result::Result<T, Failure>;
