use thiserror::Error;

/// Errors raised by the sampling, estimation and oracle routines.
///
/// The `Display` form of every variant starts with the variant name so that
/// command-line front ends can report the error kind verbatim.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("SupportViolation: target has positive density at x = {x} where the proposal density is zero")]
    SupportViolation { x: f64 },

    #[error("SupportViolation: {0}")]
    SupportMismatch(String),

    #[error("DegenerateWeights: {0}")]
    DegenerateWeights(&'static str),

    #[error("OracleDivergence: {0}")]
    OracleDivergence(String),

    #[error("NoDensity: {0}")]
    NoDensity(&'static str),

    #[error("InvalidParameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    /// Short name of the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::SupportViolation { .. } | Error::SupportMismatch(_) => "SupportViolation",
            Error::DegenerateWeights(_) => "DegenerateWeights",
            Error::OracleDivergence(_) => "OracleDivergence",
            Error::NoDensity(_) => "NoDensity",
            Error::InvalidParameter(_) => "InvalidParameter",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
