use alloc::string::String;

/// Errors raised by the lattice, model and analysis routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("angle {value} outside [{min}, {max}) for the {preset} lattice")]
    AngleOutOfRange {
        preset: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("basis must be nonsingular with positive determinant (det = {det})")]
    SingularBasis { det: f64 },
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("domain too small: no cell fits inside the box")]
    DomainTooSmall,
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
    #[error("inadmissible model: {0}")]
    InadmissibleModel(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("atoms {0} and {1} coincide")]
    CoincidentAtoms(usize, usize),
    #[error("invalid crack plane: {0}")]
    InvalidPlane(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
}

pub type Result<T> = core::result::Result<T, Error>;
