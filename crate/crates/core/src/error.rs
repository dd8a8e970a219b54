use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain overflow: {0}")]
    DomainOverflow(String),

    #[error("operator is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),

    #[error("no unstable mode: most negative eigenvalue of T is {0:.3e}")]
    NoUnstableMode(f64),

    #[error("negative-direction witness search failed (best value {0:.3e})")]
    WitnessFailure(f64),

    #[error("constraint set is numerically rank deficient")]
    DegenerateConstraints,

    #[error("fixed-point iteration did not converge at t = {t} (increment {increment:.3e})")]
    NonConvergence { t: f64, increment: f64 },

    #[error("newton iteration failed: {0}")]
    NoConvergence(String),

    #[error("shift {shift} collides with the discrete spectrum (pivot ratio {pivot:.3e})")]
    SpectrumCollision { shift: f64, pivot: f64 },

    #[error("seed tolerance {tolerance:.3e} unreachable: residual {residual:.3e} at order {order}")]
    SeedTolerance { tolerance: f64, residual: f64, order: usize },

    #[error("inconclusive: {0}")]
    Inconclusive(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn invalid(msg: impl Into<String>) -> LabError {
    LabError::InvalidArgument(msg.into())
}
