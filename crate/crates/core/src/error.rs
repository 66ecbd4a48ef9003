use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite input in {0}")]
    NonFinite(&'static str),

    #[error("singular kernel evaluated at zero separation")]
    SingularAtOrigin,

    #[error("points {first} and {second} coincide")]
    Coincident { first: usize, second: usize },

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("label {0} carries zero total circulation")]
    ZeroCirculation(String),

    #[error("label {0} has no particles")]
    EmptyLabel(String),

    #[error("expected {expected} reference positions, got {actual}")]
    LabelCountMismatch { expected: usize, actual: usize },

    #[error("sampling would create {count} particles, above the limit of {limit}")]
    TooManyParticles { count: usize, limit: usize },

    #[error("non-finite state at t = {time} (step {step})")]
    NonFiniteState { step: usize, time: f64 },

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_param(
    ok: bool,
    name: &'static str,
    value: f64,
    reason: &'static str,
) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason,
        })
    }
}
