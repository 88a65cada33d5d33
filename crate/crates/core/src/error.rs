use thiserror::Error;

use crate::lattice::Momentum;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    Lattice(String),

    #[error("invalid potential: {0}")]
    Potential(String),

    #[error("invalid distribution: {0}")]
    Distribution(String),

    #[error("time must be positive, got t = {0}")]
    NonPositiveTime(f64),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("transfer momentum k must be nonzero")]
    ZeroTransfer,

    #[error("oracle refused: p_F = {p_f} exceeds the cost guard {limit}")]
    OracleGuard { p_f: f64, limit: f64 },

    #[error("invalid initial data: {0}")]
    InvalidState(#[from] StateViolation),

    #[error("infeasible generation: {0}")]
    Infeasible(String),

    #[error("invalid scaling regime: {0}")]
    Regime(String),

    #[error("invariant breach: {0}")]
    Invariant(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Reasons a candidate set of holes and particles is rejected.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateViolation {
    #[error("charged data: {holes} holes vs {particles} particles")]
    Charged { holes: usize, particles: usize },

    #[error("points {a:?} and {b:?} are closer than r = {r}")]
    TooClose { a: Momentum, b: Momentum, r: i64 },

    #[error("point {q:?} has no coordinate in the band [eps p_F^2, (1 - eps) p_F^2]")]
    ComponentBand { q: Momentum },

    #[error("point {q:?} lies on the Fermi surface shell")]
    OnSurface { q: Momentum },

    #[error("hole {q:?} is outside the Fermi ball")]
    HoleOutside { q: Momentum },

    #[error("particle {q:?} is inside the Fermi ball")]
    ParticleInside { q: Momentum },

    #[error("point {q:?} appears more than once")]
    Duplicate { q: Momentum },

    #[error("epsilon must lie in (0, 1/2), got {0}")]
    Epsilon(f64),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invariant(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
