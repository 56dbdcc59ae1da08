use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("mode {0} is not in the registry")]
    UnknownMode(String),
    #[error("duplicate mode {0} in registry")]
    DuplicateMode(String),
    #[error("registry has {count} modes, cap is {cap}")]
    TooManyModes { count: usize, cap: usize },
    #[error("operands are bound to different registries")]
    RegistryMismatch,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),
    #[error("matrix exponential series did not converge in {0} terms")]
    SeriesDiverged(usize),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("functions live on different grids")]
    GridMismatch,
    #[error("point {0} is not a grid point")]
    OffGrid(f64),
    #[error("packet at {center} with width {width} does not fit the grid")]
    PacketClipped { center: f64, width: f64 },
    #[error("invalid width {0}")]
    InvalidWidth(f64),
    #[error("invalid threshold {0}")]
    InvalidThreshold(f64),
    #[error("function is not normalized (norm {0})")]
    NotNormalized(f64),
    #[error("invalid direction: {0}")]
    InvalidDirection(String),
    #[error("occupation ({0}) listed twice")]
    DuplicateOccupation(String),
    #[error("regions must differ for a correlation")]
    SameRegion,
    #[error("qubits must differ for a correlation")]
    SameQubit,
    #[error("qubit index {0} out of range 1..=3")]
    QubitIndex(usize),
    #[error("sign product s1*s2*s3 must be -1, got {0}")]
    SignConstraint(i32),
    #[error("factor parameters violate cos(theta*g) = 0: {0}")]
    FactorParams(String),
    #[error("kappa must be finite and non-negative, got {0}")]
    InvalidKappa(f64),
    #[error("transform flavor mismatch: {0}")]
    FlavorMismatch(&'static str),
    #[error("registry is missing a required mode: {0}")]
    MissingMode(String),
    #[error("expected a real value, imaginary part {0}")]
    NonReal(f64),
    #[error("csv: {0}")]
    Csv(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
