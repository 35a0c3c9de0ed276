use thiserror::Error;

/// Failures shared by every module of the lab.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("operator is not self-adjoint (Hermiticity residual {residual:e})")]
    NotSelfAdjoint { residual: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },

    #[error("vectors are not orthonormal (Gram residual {residual:e})")]
    NotOrthonormal { residual: f64 },

    #[error("dense representation of dimension {dim} exceeds the cap of {cap}")]
    TooLarge { dim: usize, cap: usize },

    #[error("the zero vector cannot be normalized")]
    ZeroVector,

    #[error("degenerate spectrum: eigenvalue {eigenvalue} has multiplicity {multiplicity}")]
    DegenerateSpectrum { eigenvalue: f64, multiplicity: usize },

    #[error("operators do not commute (commutator norm {residual:e})")]
    NotCommuting { residual: f64 },

    #[error("{value} is not a point of the lattice")]
    OffLattice { value: f64 },

    #[error("incommensurate parameters: {0}")]
    IncommensurateParams(String),

    #[error("wave function too close to a node at x = {x}, t = {t}")]
    NearNode { x: f64, t: f64 },

    #[error("step halving exhausted near t = {t}")]
    StepUnderflow { t: f64 },

    #[error("trajectory ends at t = {final_time}, before the horizon {horizon}")]
    HorizonTooShort { final_time: f64, horizon: f64 },

    #[error("degenerate initial condition: {0}")]
    DegenerateInitial(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
