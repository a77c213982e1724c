use thiserror::Error;

use crate::fock::PortBasis;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("state is in the {found} basis, expected the {expected} basis")]
    BasisMismatch { expected: PortBasis, found: PortBasis },

    #[error("states share an occupied mode; product is only defined on disjoint modes")]
    OverlappingModes,

    #[error("invalid mode: {0}")]
    InvalidMode(String),

    #[error("post-selection left no surviving amplitude")]
    EmptyPostSelection,

    #[error("state is not normalized (squared norm {0})")]
    NotNormalized(f64),

    #[error("malformed detection outcome: {0}")]
    MalformedOutcome(String),

    #[error("outcome {0} is not a key-generating event")]
    NotKeep(String),

    #[error("projected ancilla state is not one of the tabulated Bell states")]
    NotBellState,

    #[error("{name} = {value} is outside {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("{0} is zero, quantity is undefined")]
    ZeroDenominator(&'static str),

    #[error("security parameters violate {0}")]
    Constraint(&'static str),

    #[error("quadrature did not converge: achieved {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("at least one trial is required")]
    ZeroTrials,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_range(name: &'static str, value: f64, lo: f64, hi: f64, range: &'static str) -> Result<()> {
    if value.is_nan() || value < lo || value > hi {
        return Err(Error::OutOfRange { name, value, range });
    }
    Ok(())
}
