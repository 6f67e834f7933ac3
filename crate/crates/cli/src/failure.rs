use std::fmt;

use nashfee::Error;

/// An error with the process exit code it maps to.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

impl Failure {
    pub fn validation(message: impl Into<String>) -> Self {
        Self { code: EXIT_VALIDATION, message: message.into() }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self { code: EXIT_NUMERICAL, message: message.into() }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::IndexOutOfRange { .. }
            | Error::SameIndex(_)
            | Error::DimensionMismatch { .. }
            | Error::InvalidParameter(_)
            | Error::TooManyPlayers { .. } => Failure::validation(e.to_string()),
            Error::OutOfDomain(_)
            | Error::InversionFailed { .. }
            | Error::NoRoot
            | Error::NodeFailure { .. }
            | Error::Optimizer(_) => Failure::numerical(e.to_string()),
        }
    }
}
