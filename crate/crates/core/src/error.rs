use thiserror::Error;

/// Errors raised by the rate, fluctuation and estimation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {what} (got {value})")]
    Domain { what: &'static str, value: f64 },

    #[error("undefined channel: transmittance must be in (0, 1], got {0}")]
    UndefinedChannel(f64),

    #[error("nonphysical state: discriminant {discriminant} below zero for {which}")]
    NonPhysicalState {
        which: &'static str,
        discriminant: f64,
    },

    #[error("no positive rate at the start of the search interval (rate {0})")]
    NoPositiveRate(f64),

    #[error("invalid fluctuation model: {0}")]
    InvalidModel(String),

    #[error("non-finite integrand value {value} at d = {at}")]
    NonFinite { at: f64, value: f64 },

    #[error("degenerate data: {0}")]
    DegenerateData(&'static str),

    #[error("estimation failure: estimated transmittance {0} is not positive")]
    EstimationFailure(f64),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(what: &'static str, value: f64) -> Error {
    Error::Domain { what, value }
}
