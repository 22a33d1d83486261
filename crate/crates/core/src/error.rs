use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sphere centers {0} and {1} coincide")]
    CoincidentCenters(usize, usize),
    #[error("invalid sphere configuration: {0}")]
    InvalidConfiguration(String),
    #[error("mobility matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NumericalPsdViolation { min_eigenvalue: f64 },
    #[error("friction coefficient must be positive, got {0}")]
    NonPositiveGamma(f64),
    #[error("mobility is singular (min eigenvalue {min_eigenvalue:e} <= {tolerance:e})")]
    SingularMobility { min_eigenvalue: f64, tolerance: f64 },
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("e^-V is not integrable on the domain (estimated tail mass {tail_mass:e})")]
    NotIntegrable { tail_mass: f64 },
    #[error("negative density {value:e} at cell {index}")]
    NegativeDensity { index: usize, value: f64 },
    #[error("non-finite state after step {step}")]
    NonFiniteState { step: u64 },
    #[error("time step violates the transport stability bound (cfl = {cfl})")]
    CflViolation { cfl: f64 },
    #[error("negative cell value {value:e} at ({ix}, {iv})")]
    NegativeCell { ix: usize, iv: usize, value: f64 },
    #[error("linear solve failed: {0}")]
    LinearSolveFailure(String),
    #[error("density {min:e} is below the floor {floor:e}")]
    DegenerateDensity { min: f64, floor: f64 },
    #[error("{0} requires a phase-space grid representation")]
    GridOnly(&'static str),
    #[error("incompatible grids: {0}")]
    IncompatibleGrids(String),
    #[error("order fit needs positive values, got {0}")]
    NonPositiveValue(f64),
    #[error("order fit needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
