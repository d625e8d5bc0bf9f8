use thiserror::Error;

use crate::criterion::Inequality;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("vector does not conform to {space}: {reason}")]
    Conformance { space: String, reason: String },

    #[error("invalid scalar set: {0}")]
    InvalidGamma(String),

    #[error("horizon {horizon} is too small (need at least {required})")]
    InsufficientHorizon { horizon: u64, required: u64 },

    #[error("{what} = {value} is out of range ({range})")]
    OutOfRange {
        what: &'static str,
        value: String,
        range: String,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("schedule generation starved set A_{k}: empirical lower density {achieved:.3e} < {required:.3e}")]
    ScheduleGeneration { k: usize, achieved: f64, required: f64 },

    #[error("numeric range exceeded: {0}")]
    NumericRange(String),

    #[error("iterate of phi exceeds 2^62 (n = {n}, m = {m})")]
    PhiRange { n: u64, m: u64 },

    #[error("scalar generator cannot meet the witness lower bound at n = {n}: {reason}")]
    UnboundednessViolation { n: usize, reason: String },

    #[error("truncation budget exceeded: {0}")]
    TruncationBudget(String),

    #[error("construction failed at l = {level}: no schedule index satisfies inequality {inequality} (last candidate k = {last_k}, value {value:.3e} > bound {bound:.3e})")]
    ConstructionFailure {
        level: usize,
        inequality: Inequality,
        last_k: usize,
        value: f64,
        bound: f64,
    },

    #[error("hypothesis not met at index {index}: consecutive ratio {ratio} < delta {delta}")]
    HypothesisNotMet { index: usize, ratio: f64, delta: f64 },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl Error {
    pub(crate) fn conformance(space: impl ToString, reason: impl Into<String>) -> Self {
        Error::Conformance {
            space: space.to_string(),
            reason: reason.into(),
        }
    }

    pub(crate) fn out_of_range(what: &'static str, value: impl ToString, range: impl Into<String>) -> Self {
        Error::OutOfRange {
            what,
            value: value.to_string(),
            range: range.into(),
        }
    }
}
