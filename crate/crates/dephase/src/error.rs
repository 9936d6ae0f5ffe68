//! Error type shared by every module in the crate.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A parameter fell outside its documented domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A density matrix failed one of its structural checks.
    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    /// The requested combination of model and solver is not defined.
    #[error("unsupported-model: {0}")]
    UnsupportedModel(String),

    /// Adaptive quadrature ran out of subdivisions before reaching the
    /// requested relative tolerance.
    #[error("quadrature did not converge: achieved {achieved:.3e}, requested {requested:.3e}")]
    QuadratureNonConvergence { achieved: f64, requested: f64 },

    /// A spectral density grows too fast at low frequency for the requested
    /// functional to exist.
    #[error("spectral density diverges at low frequency: {0}")]
    LowFrequencyDivergence(String),

    /// The adaptive step controller drove the step size to zero.
    #[error("step size underflow at t = {t:.6e}")]
    StepSizeUnderflow { t: f64 },

    /// Truncated-basis state preparation discarded too much population.
    #[error("truncation tail {tail:.3e} exceeds 1e-10; a cutoff of at least {required} is needed")]
    TruncationTail { tail: f64, required: usize },

    /// The total Hilbert-space dimension exceeds the configured bound.
    #[error("Hilbert dimension {dim} exceeds the configured limit {limit}")]
    DimensionLimit { dim: usize, limit: usize },

    /// A coherence magnitude underflowed; its logarithm is meaningless.
    #[error("coherence magnitude below 1e-300 at t = {t:.6e}")]
    CoherenceUnderflow { t: f64 },

    /// Cumulant orders above four are not implemented.
    #[error("cumulant order {0} not supported (1..=4)")]
    UnsupportedOrder(usize),
}
