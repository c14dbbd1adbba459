use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("tail of V does not decay toward -1/(4x^2): {0}")]
    NonDecayingTail(String),
    #[error("solution already oscillates at E_floor = {0}; eigenvalues may lie below the floor")]
    FloorTooHigh(f64),
    #[error("argument {0} outside the domain")]
    DomainError(f64),
    #[error("adaptive step underflow at x = {x} (h = {h})")]
    StepFailure { x: f64, h: f64 },
    #[error("seeding point {x_star} exceeds the maximum domain {max_domain} (xi = {xi})")]
    SeedOutOfRange { xi: f64, x_star: f64, max_domain: f64 },
    #[error("ill-conditioned zero-energy fit (condition number {0:e})")]
    IllConditionedFit(f64),
    #[error("degenerate Wronskian |W(f+, phi)| = {value:e} at xi = {xi}")]
    DegenerateWronskian { xi: f64, value: f64 },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("boundary violation: |f'(0)| = {0:e}")]
    BoundaryViolation(f64),
    #[error("Nyquist violation: dxi*(t + x_max) = {0} > pi/4")]
    NyquistViolation(f64),
    #[error("CFL violation: dt/dx = {0} > 0.9")]
    CflViolation(f64),
    #[error("domain too small: L = {length} < support + T = {required}")]
    DomainTooSmall { length: f64, required: f64 },
    #[error("exclusion half-width {delta} exceeds 8 local grid steps ({limit})")]
    ExclusionTooWide { delta: f64, limit: f64 },
    #[error("potential is resonant; the estimate requires a nonresonant potential")]
    ResonantPotential,
    #[error("parity mismatch: {0}")]
    Parity(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("at xi = {xi}: {source}")]
    AtFrequency {
        xi: f64,
        #[source]
        source: Box<Error>,
    },
    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
