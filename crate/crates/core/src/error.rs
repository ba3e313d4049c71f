use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension must be at least 1")]
    EmptyState,

    #[error("invalid spin {0}: must be a non-negative half-integer")]
    InvalidSpin(f64),

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("undefined weak value: overlap modulus {0:e} is below the floor")]
    UndefinedWeakValue(f64),

    #[error("pointer widths differ: {0} vs {1}")]
    WidthMismatch(f64, f64),

    #[error("pointer kinds differ")]
    KindMismatch,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("insufficient quadrature grid: {0}")]
    InsufficientGrid(String),

    #[error("post-selection probability {0:e} is below the floor")]
    PostselectionUnderflow(f64),

    #[error("invalid probabilities: {0}")]
    InvalidProbabilities(String),

    #[error("fit needs at least 3 usable samples, found {usable}")]
    InsufficientSamples { usable: usize },

    #[error("inconsistent pointer moments: <B^4> = {b4} < <B^2>^2 = {b2_sq}")]
    InconsistentMoments { b4: f64, b2_sq: f64 },

    #[error("Hermitian eigensolver did not converge")]
    NoConvergence,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
