//! Error type shared by all modules.

use thiserror::Error;

/// Errors surfaced by state construction, channel application, and metrics.
#[derive(Debug, Clone, Error)]
pub enum FockError {
    /// Two states or operators live on incompatible mode spaces.
    #[error("mode space mismatch: {0}")]
    SpaceMismatch(String),

    /// An operator or amplitude vector has the wrong dimensions.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A mode index is out of range or repeated where it must be unique.
    #[error("invalid mode selection: {0}")]
    InvalidMode(String),

    /// The requested state or operator does not fit the truncated space to
    /// the required tolerance.
    #[error("truncation insufficient for {what}: tail mass {tail:.3e} exceeds {limit:.3e}")]
    TruncationInsufficient {
        what: String,
        tail: f64,
        limit: f64,
    },

    /// A matrix that must be Hermitian is not, beyond tolerance.
    #[error("matrix is not Hermitian: max deviation {deviation:.3e}")]
    NotHermitian { deviation: f64 },

    /// A parameter is outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A heralding projection annihilated the state.
    #[error("heralding projection has zero probability: {0}")]
    ZeroHerald(String),

    /// Normalizing a zero vector or zero-trace operator.
    #[error("cannot normalize: {0} is zero")]
    ZeroNorm(String),

    /// Gaussian quadrature failed its node-doubling convergence check.
    #[error("phase-noise quadrature not converged: node doubling changed the result by {delta:.3e}")]
    QuadratureNotConverged { delta: f64 },
}

pub type Result<T> = std::result::Result<T, FockError>;
