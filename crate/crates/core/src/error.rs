//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors produced by constructors, combinators and verifiers.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Operand dimensions are incompatible.
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    /// A matrix required to be Hermitian is not, within tolerance.
    #[error("matrix is not Hermitian: residual {residual:.3e} exceeds {tol:.3e}")]
    NotHermitian { residual: f64, tol: f64 },

    /// A matrix required to be positive semidefinite has a negative eigenvalue
    /// below the clamping band.
    #[error("matrix is not positive semidefinite: min eigenvalue {min_eigenvalue:.3e}")]
    NotPsd { min_eigenvalue: f64 },

    /// A random-generator normalizer is numerically singular.
    #[error("singular normalizer: min eigenvalue {0:.3e}")]
    SingularNormalizer(f64),

    /// State update requested for an outcome of probability zero.
    #[error("outcome `{0}` has zero probability")]
    ZeroProbability(String),

    /// Outcome label sets do not agree.
    #[error("label mismatch: {0}")]
    LabelMismatch(String),

    /// Mixture weights are negative or do not sum to one.
    #[error("bad weights: {0}")]
    BadWeights(String),

    /// A post-processing matrix is not row-stochastic.
    #[error("bad stochastic matrix: {0}")]
    BadStochasticMatrix(String),

    /// An output space does not factor as the declared tensor product.
    #[error("dimension {dim} does not factor as {n1}x{n2}")]
    BadFactorization { dim: usize, n1: usize, n2: usize },

    /// Effects expected to commute do not.
    #[error("effects do not commute: max commutator entry {0:.3e}")]
    NonCommuting(f64),

    /// The instrument passed to a sequential-product construction does not
    /// measure the stated observable.
    #[error("instrument does not measure the given observable: residual {0:.3e}")]
    InstrumentDoesNotMeasureA(f64),

    /// Holevo specs expected to share output states do not.
    #[error("state mismatch between Holevo specs: residual {0:.3e}")]
    StateMismatch(f64),

    /// A joint bi-instrument failed certificate verification.
    #[error("uncertified joint: residuals {residual_1:.3e}, {residual_2:.3e}")]
    UncertifiedJoint { residual_1: f64, residual_2: f64 },

    /// A domain-type invariant failed at construction.
    #[error("invalid {object}: {reason} (residual {residual:.3e})")]
    InvariantViolation {
        object: &'static str,
        reason: &'static str,
        residual: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
