//! Failure classification: every error leaving the CLI maps to an exit code
//! and a JSON body `{code, message, context}` on stderr.

use serde::Serialize;
use serde_json::{json, Value};
use std::fmt;

pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;
pub const EXIT_VERIFICATION: u8 = 4;
pub const EXIT_IO: u8 = 1;

/// Invalid flags or inputs, detected before any computation.
#[derive(Debug)]
pub struct Invalid {
    pub message: String,
    pub context: Value,
}

impl Invalid {
    pub fn new(message: impl Into<String>, context: Value) -> Self {
        Invalid { message: message.into(), context }
    }
}

impl fmt::Display for Invalid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Invalid {}

/// A verification suite ran to completion and at least one check failed.
#[derive(Debug)]
pub struct VerificationFailed {
    pub suite: String,
    pub failed: Vec<String>,
}

impl fmt::Display for VerificationFailed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "suite {} failed: {}", self.suite, self.failed.join(", "))
    }
}

impl std::error::Error for VerificationFailed {}

#[derive(Debug, Serialize)]
pub struct ErrorBody {
    pub code: u8,
    pub message: String,
    pub context: Value,
}

/// Exit code and body for an error returned by a command.
pub fn classify(err: &anyhow::Error) -> ErrorBody {
    if let Some(e) = err.downcast_ref::<Invalid>() {
        return ErrorBody { code: EXIT_VALIDATION, message: e.message.clone(), context: e.context.clone() };
    }
    if let Some(e) = err.downcast_ref::<VerificationFailed>() {
        return ErrorBody {
            code: EXIT_VERIFICATION,
            message: e.to_string(),
            context: json!({ "suite": e.suite, "failed": e.failed }),
        };
    }
    if let Some(e) = err.downcast_ref::<p4cm_core::Error>() {
        let kind = match e {
            p4cm_core::Error::Output(_) => return io_body(err),
            p4cm_core::Error::OutOfRange(_) => "out_of_range",
            p4cm_core::Error::Pole(_) => "pole",
            p4cm_core::Error::Domain(_) => "domain",
            p4cm_core::Error::SeedUnderflow { .. } => "seed_underflow",
            p4cm_core::Error::StepCollapse { .. } => "step_collapse",
            p4cm_core::Error::IrregularPole { .. } => "irregular_pole",
            p4cm_core::Error::NoConvergence(_) => "no_convergence",
            p4cm_core::Error::NonPositiveDeterminant { .. } => "non_positive_determinant",
            p4cm_core::Error::SingularDenominator { .. } => "singular_denominator",
            p4cm_core::Error::Inconsistent(_) => "inconsistent",
        };
        return ErrorBody {
            code: EXIT_NUMERICAL,
            message: err.to_string(),
            context: json!({ "kind": kind, "chain": chain(err) }),
        };
    }
    io_body(err)
}

fn io_body(err: &anyhow::Error) -> ErrorBody {
    ErrorBody { code: EXIT_IO, message: err.to_string(), context: json!({ "chain": chain(err) }) }
}

fn chain(err: &anyhow::Error) -> Vec<String> {
    err.chain().map(|e| e.to_string()).collect()
}
