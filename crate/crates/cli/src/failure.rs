//! Failure classes and their exit codes.

use std::fmt;

/// Bad or unreadable configuration; exit code 1.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

/// A validation check did not hold; exit code 3.
#[derive(Debug)]
pub struct CheckFailed(pub Vec<String>);

impl fmt::Display for CheckFailed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "failed checks: {}", self.0.join(", "))
    }
}

impl std::error::Error for CheckFailed {}

pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_NUMERIC: u8 = 2;
pub const EXIT_CHECK: u8 = 3;

/// Everything that is neither a config nor a check failure counts as numeric.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    if err.chain().any(|e| e.is::<ConfigError>()) {
        EXIT_CONFIG
    } else if err.chain().any(|e| e.is::<CheckFailed>()) {
        EXIT_CHECK
    } else {
        EXIT_NUMERIC
    }
}
