use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A point was fed to a system living on a different phase space.
    #[error("phase-space mismatch: {0}")]
    PhaseSpaceMismatch(String),

    /// An input coordinate lies outside the domain of the map.
    #[error("domain error: {0}")]
    Domain(String),

    /// A system or algorithm parameter violates its constraint.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// An index range is empty or inverted.
    #[error("range error: {0}")]
    Range(String),

    /// A geometric kernel failed to produce an intersection. Indicates a
    /// bug in the kernel, never expected for valid inputs.
    #[error("geometry error: {0}")]
    Geometry(String),

    /// Too few usable data points to fit an estimate.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A Monte Carlo estimate has no sample support.
    #[error("undersampled: {0}")]
    Undersampled(String),
}

pub type Result<T> = std::result::Result<T, Error>;
