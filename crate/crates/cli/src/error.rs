use morsecount_core::{BubbleError, IndexError, KError};
use serde::Serialize;
use std::fmt;
use std::process::ExitCode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    /// Malformed arguments or input files.
    Parse,
    /// Input that parses but violates a precondition.
    Invariant,
    /// A numerical routine did not converge.
    Nonconvergence,
    Io,
    Internal,
}

impl ErrorKind {
    pub fn exit_code(self) -> u8 {
        match self {
            ErrorKind::Parse => 2,
            ErrorKind::Invariant => 3,
            ErrorKind::Nonconvergence => 4,
            ErrorKind::Io => 5,
            ErrorKind::Internal => 6,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn new(kind: ErrorKind, message: impl Into<String>) -> Self {
        Self { kind, message: message.into() }
    }

    pub fn parse(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Parse, message)
    }

    pub fn invariant(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Invariant, message)
    }

    pub fn io(context: &str, err: impl fmt::Display) -> Self {
        Self::new(ErrorKind::Io, format!("{context}: {err}"))
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.kind.exit_code())
    }

    /// Writes the error as one JSON object on stderr.
    pub fn emit(&self) {
        let body = serde_json::json!({ "error": self });
        eprintln!("{body}");
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}: {}", self.kind, self.message)
    }
}

impl From<IndexError> for CliError {
    fn from(e: IndexError) -> Self {
        let kind = match e {
            IndexError::Inconsistent { .. } => ErrorKind::Internal,
            _ => ErrorKind::Invariant,
        };
        Self::new(kind, e.to_string())
    }
}

impl From<KError> for CliError {
    fn from(e: KError) -> Self {
        let kind = match e {
            KError::MissingMaximum(_) | KError::EmptyBlowUpSet => ErrorKind::Nonconvergence,
            KError::Index(IndexError::Inconsistent { .. }) => ErrorKind::Internal,
            _ => ErrorKind::Invariant,
        };
        Self::new(kind, e.to_string())
    }
}

impl From<BubbleError> for CliError {
    fn from(e: BubbleError) -> Self {
        let kind = match e {
            BubbleError::QuadratureNonconvergence { .. } | BubbleError::NoisyGradient { .. } | BubbleError::NonFinite => {
                ErrorKind::Nonconvergence
            }
            _ => ErrorKind::Invariant,
        };
        Self::new(kind, e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::io("csv", e)
    }
}
