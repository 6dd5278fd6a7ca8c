use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure classes, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// A physical or mathematical precondition does not hold.
    Precondition,
    /// A numerical method failed to reach its tolerance.
    NonConvergence,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("Fock truncation n_max must be at least 1, got {0}")]
    InvalidTruncation(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error(
        "coherent state beta = {beta} has tail mass {tail:.3e} above n_max = {n_max} (limit {limit:.0e}); increase n_max"
    )]
    CoherentTail {
        beta: Complex64,
        tail: f64,
        n_max: usize,
        limit: f64,
    },

    #[error("phase point (q1, p1) = ({q1}, {p1}) lies outside the Bloch domain q1^2 + p1^2 < 2")]
    BlochDomain { q1: f64, p1: f64 },

    #[error("operator is not Hermitian: max |M - M^dag| = {deviation:.3e}")]
    NotHermitian { deviation: f64 },

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error(
        "squeezing r = {r} needs more photons: squeezed-vacuum tail above n = {cutoff} is {tail:.3e} (limit {limit:.0e})"
    )]
    TruncationInadequate {
        r: f64,
        cutoff: usize,
        tail: f64,
        limit: f64,
    },

    #[error("integrator step size underflow at t = {t} (h = {h:.3e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("integrator exceeded {0} steps")]
    TooManySteps(usize),

    #[error("tolerance not met: {0}")]
    ToleranceNotMet(String),

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("invalid time series: {0}")]
    InvalidSeries(String),

    #[error("gradient undefined this close to the Bloch boundary (q1^2 + p1^2 = {radius2})")]
    BoundaryProximity { radius2: f64 },

    #[error(
        "truncation n_max = {n_max} too small at r = {r}: evolved state holds {mass:.3e} on the top Fock levels (limit {limit:.0e})"
    )]
    FockEdge {
        r: f64,
        n_max: usize,
        mass: f64,
        limit: f64,
    },

    #[error("no admissible cell or seed: {0}")]
    EmptyRegion(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::StepUnderflow { .. }
            | Error::TooManySteps(_)
            | Error::ToleranceNotMet(_)
            | Error::Eigen(_) => ErrorKind::NonConvergence,
            _ => ErrorKind::Precondition,
        }
    }
}
