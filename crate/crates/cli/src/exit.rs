//! Process exit codes.

use std::fmt;

use nbundle_core::Error;

pub const SUCCESS: i32 = 0;
pub const OTHER: i32 = 1;
pub const CONFIG: i32 = 2;
pub const NUMERICAL: i32 = 3;
pub const ACCEPTANCE: i32 = 4;

/// Raised by `reproduce` when a figure check does not hold. Outputs are kept.
#[derive(Debug)]
pub struct AcceptanceFailure {
    pub failed: Vec<String>,
}

impl fmt::Display for AcceptanceFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "acceptance checks failed: {}", self.failed.join(", "))
    }
}

impl std::error::Error for AcceptanceFailure {}

fn core_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::InvalidParameter { .. }
        | Error::InvalidTruncation(_)
        | Error::DimensionOverflow(_)
        | Error::EmptyWindow(..) => CONFIG,
        Error::InvariantViolation { .. }
        | Error::NormUnderflow(_)
        | Error::StepSizeUnderflow { .. }
        | Error::NotNormalized(_)
        | Error::NonRealExpectation(_)
        | Error::BracketFailure { .. }
        | Error::UndefinedCorrelation(_) => NUMERICAL,
        Error::DimensionMismatch { .. } | Error::UnknownColumn(_) | Error::Io(_) => OTHER,
    }
}

/// First classifiable cause in the chain decides.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.downcast_ref::<AcceptanceFailure>().is_some() {
            return ACCEPTANCE;
        }
        if let Some(e) = cause.downcast_ref::<Error>() {
            return core_code(e);
        }
    }
    OTHER
}

#[cfg(test)]
mod tests {
    use super::*;
    use anyhow::Context;

    #[test]
    fn classification_sees_through_context() {
        let e = Err::<(), _>(Error::Config("x".into())).context("loading").unwrap_err();
        assert_eq!(exit_code(&e), CONFIG);
        let e = anyhow::Error::new(Error::StepSizeUnderflow { time: 1.0, step: 1e-20 });
        assert_eq!(exit_code(&e), NUMERICAL);
        let e = anyhow::Error::new(AcceptanceFailure { failed: vec!["a".into()] });
        assert_eq!(exit_code(&e), ACCEPTANCE);
        assert_eq!(exit_code(&anyhow::anyhow!("other")), OTHER);
    }
}
