use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("dimension {0} outside supported range 1..=8")]
    UnsupportedDimension(usize),

    #[error("cannot normalize a vector with squared norm {0:e}")]
    ZeroNorm(f64),

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("vectors are not orthonormal (max Gram deviation {0:e})")]
    NotOrthonormal(f64),

    #[error("coupling strength beta = {0} outside [0, 1]")]
    CouplingOutOfRange(f64),

    #[error("rotation angle {0} outside [0, pi/2]")]
    AngleOutOfRange(f64),

    #[error("visibility {0} outside [0, 1]")]
    VisibilityOutOfRange(f64),

    #[error("dark fringe at delta = {delta}: detection probability {probability:e} vanishes, the quantum object is never found here")]
    DarkFringe { delta: f64, probability: f64 },

    #[error("natural/canonical crossing undefined at visibility {0}")]
    CrossingUndefined(f64),

    #[error("non-finite integrand at delta = {0}")]
    NonFiniteIntegrand(f64),

    #[error("qubit index {0} out of range")]
    InvalidQubit(usize),

    #[error("measurement probabilities sum to {0}, expected 1")]
    ProbabilityLeak(f64),

    #[error("only {observed} conditional shots recorded, need at least {required}")]
    ShotStarvation { observed: u64, required: u64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
