use thiserror::Error;

/// Errors raised by the toolkit.
///
/// Divergent integrals are usually reported as `f64::INFINITY` values rather
/// than errors; an error means an operation was asked for something it cannot
/// define or certify.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("infinite level sets: step function does not vanish at infinity")]
    InfiniteLevelSets,

    #[error("invalid step function: {0}")]
    InvalidStep(String),

    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("P undefined: non-integrable at origin")]
    HardyPUndefined,

    #[error("Q undefined: non-integrable tail")]
    HardyQUndefined,

    #[error("non-convergent quadrature ({panels} panels, error estimate {error:e})")]
    NonConvergent { panels: usize, error: f64 },

    #[error("integral to infinity requires a decay envelope with exponent > 1")]
    MissingEnvelope,

    #[error("integral from the origin requires an origin bound with exponent > -1")]
    MissingOriginBound,

    #[error("divergent integral: {0}")]
    Divergent(String),

    #[error("v' undefined: finite total mass")]
    FiniteMass,

    #[error("inadmissible weight: integral of u/(1+t)^p diverges")]
    Inadmissible,

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("modular never <= 1")]
    BracketFailure,

    #[error("N-function is not invertible: {0}")]
    NonInvertible(String),

    #[error("unsupported dimension {0} (only 1 and 3)")]
    UnsupportedDimension(u32),

    #[error("envelope too weak: tail bound {bound:e} exceeds {requested:e}; try a frequency window of {suggested_window:e}")]
    WeakEnvelope {
        bound: f64,
        requested: f64,
        suggested_window: f64,
    },

    #[error("unsupported operation: {0}")]
    Unsupported(String),
}

impl Error {
    /// True for failures of the numerical machinery (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonConvergent { .. } | Error::WeakEnvelope { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
