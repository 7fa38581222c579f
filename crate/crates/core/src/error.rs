use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("lattice of size {size} exceeds the limit {limit}")]
    LatticeTooLarge { size: u128, limit: usize },

    #[error("budget exceeded: {needed} > {budget}")]
    BudgetExceeded { needed: usize, budget: usize },

    #[error("{qubits} qubits exceeds the simulator limit of {limit}")]
    TooManyQubits { qubits: usize, limit: usize },

    #[error("{count} parameterised gates exceeds the propagation limit of {limit}")]
    TooManyRotations { count: usize, limit: usize },

    #[error("lattice mismatch between operands")]
    LatticeMismatch,

    #[error("frequency {0:?} lies outside the lattice")]
    FrequencyOutOfRange(Vec<i32>),

    #[error("Hermitian symmetry violated (deviation {0:e})")]
    SymmetryViolation(f64),

    #[error("Pauli string must carry phase +1")]
    NonUnitPhase,

    #[error("graph construction failed after {0} attempts")]
    RetriesExceeded(usize),

    #[error("FISTA diverged: objective {objective:e} exceeds 10x its minimum {minimum:e}")]
    Diverged { objective: f64, minimum: f64 },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("point {0:?} is not on the sampling grid")]
    OffGrid(Vec<f64>),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
