use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid units: {0}")]
    InvalidUnits(String),
    #[error("invalid potential: {0}")]
    InvalidPotential(String),
    #[error("invalid initial state: {0}")]
    InvalidInitialState(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("wavefunction not confined: |psi| at the boundary is {ratio:.3e} of max|psi| at t = {time}")]
    Confinement { time: f64, ratio: f64 },
    #[error("tridiagonal solve broke down at row {row} (pivot {pivot:.3e})")]
    SingularSystem { row: usize, pivot: f64 },
    #[error("frame sequence invalid: {0}")]
    InvalidFrames(String),
    #[error("masked probability mass {mass:.3e} exceeds {limit:.1e}; quadrature unreliable")]
    MaskedMass { mass: f64, limit: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("energy {energy} lies outside the open lead band ({lower}, {upper})")]
    OutsideBand { energy: f64, lower: f64, upper: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
