//! Error type shared across the crate.

use std::fmt;

/// Which constraint family made a plan infeasible.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfeasibleKind {
    /// State or input membership constraints could not be met.
    SetConstraint,
    /// The accumulated-supply budget constraint could not be met.
    SupplyConstraint,
}

impl fmt::Display for InfeasibleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InfeasibleKind::SetConstraint => write!(f, "state/input set constraint"),
            InfeasibleKind::SupplyConstraint => write!(f, "supply budget constraint"),
        }
    }
}

#[derive(Debug)]
pub enum Error {
    /// Caller supplied a value outside the operation's domain.
    InvalidInput(String),
    /// Vector or matrix dimensions do not agree.
    DimensionMismatch { expected: usize, got: usize, what: &'static str },
    /// Operation is not available in this build (e.g. 1-norm projection).
    Unsupported(String),
    /// An operation produced a non-finite value.
    NumericOverflow(String),
    /// A windowed check was asked for more history than the ledger holds.
    InsufficientHistory { time: usize, needed: usize },
    /// No admissible plan exists (or none was found) from the current state.
    Infeasible { kind: InfeasibleKind, detail: String },
    /// Both the cycle-length and horizon caps are exhausted.
    CertificationFailure(String),
    /// Scenario configuration is malformed.
    Config(String),
    /// A persisted log does not conform to the trajectory schema.
    Parse { line: usize, detail: String },
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::DimensionMismatch { expected, got, what } => {
                write!(f, "dimension mismatch for {what}: expected {expected}, got {got}")
            }
            Error::Unsupported(msg) => write!(f, "unsupported operation: {msg}"),
            Error::NumericOverflow(msg) => write!(f, "numeric overflow: {msg}"),
            Error::InsufficientHistory { time, needed } => {
                write!(f, "insufficient history at time {time}: window needs {needed} records")
            }
            Error::Infeasible { kind, detail } => write!(f, "infeasible ({kind}): {detail}"),
            Error::CertificationFailure(msg) => write!(f, "certification failure: {msg}"),
            Error::Config(msg) => write!(f, "config error: {msg}"),
            Error::Parse { line, detail } => write!(f, "parse error at line {line}: {detail}"),
            Error::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
