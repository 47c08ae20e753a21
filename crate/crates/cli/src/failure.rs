use std::fmt;

use context_forge_core::Error;

/// A self-check that did not hold.
#[derive(Debug)]
pub struct InvariantViolation(pub String);

impl fmt::Display for InvariantViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invariant violated: {}", self.0)
    }
}

impl std::error::Error for InvariantViolation {}

/// 1 for invalid input, 2 for I/O failures, 3 for failed invariants.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<InvariantViolation>() {
            return 3;
        }
        if cause.is::<std::io::Error>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Io(_) => 2,
                _ => 1,
            };
        }
    }
    1
}
