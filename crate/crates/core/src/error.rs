use thiserror::Error;

/// Errors raised by the construction and measurement routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("precision exhausted: {expr} could not be floored within {cap_bits} bits")]
    PrecisionExhausted { expr: String, cap_bits: u32 },

    #[error("bases {r} and {s} are multiplicatively dependent")]
    MultiplicativelyDependent { r: u64, s: u64 },

    #[error("sequence plan infeasible at k = {k}: no admissible repetition index")]
    PlanInfeasible { k: usize },

    #[error("horizon too short: r = {r} is still dependent on s at index {horizon}")]
    HorizonTooShort { r: u64, horizon: usize },

    #[error("candidate width {width} at step {step} exceeds the enumeration cap {cap}; use a toy or power schedule")]
    WidthExceedsCap { step: usize, width: i64, cap: u32 },

    #[error("scale exceeds cap: {what} ({size} > {cap})")]
    ScaleExceedsCap { what: String, size: u128, cap: u128 },

    #[error("point set is empty")]
    EmptySet,

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("state error: {0}")]
    State(String),

    #[error("verification failed: {0}")]
    Verification(String),
}

impl Error {
    /// True for the errors that signal a resource or precision cap rather
    /// than a malformed request.
    pub fn is_cap(&self) -> bool {
        matches!(
            self,
            Error::PrecisionExhausted { .. }
                | Error::WidthExceedsCap { .. }
                | Error::ScaleExceedsCap { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
