use std::fmt;

use serde::Serialize;

/// Failure class, one per exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorKind {
    Internal,
    /// Bad flags, missing or malformed inputs, capacity limits.
    Input,
    /// Remote sampler unreachable or speaking the wrong protocol.
    Transport,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Internal => 1,
            ErrorKind::Input => 2,
            ErrorKind::Transport => 3,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        CliError { kind: ErrorKind::Input, message: message.into() }
    }

    pub fn internal(message: impl Into<String>) -> Self {
        CliError { kind: ErrorKind::Internal, message: message.into() }
    }

    /// `{"error": {"kind": ..., "message": ..., "exit_code": ...}}`
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": { "kind": self.kind, "message": self.message, "exit_code": self.kind.exit_code() }
        })
        .to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<qbm_core::Error> for CliError {
    fn from(e: qbm_core::Error) -> Self {
        use qbm_core::Error as E;
        let kind = match &e {
            E::Transport(_) | E::Protocol(_) => ErrorKind::Transport,
            _ => ErrorKind::Input,
        };
        CliError { kind, message: e.to_string() }
    }
}
