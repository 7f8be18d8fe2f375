use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error(
        "truncation insufficient: cutoff {cutoff} captures {captured:.3e} of the norm, \
         cutoff {required} is required"
    )]
    TruncationInsufficient {
        cutoff: usize,
        captured: f64,
        required: usize,
    },

    #[error("photon sector {sector} leaks {leaked:.3e} of its norm past the phonon cutoff")]
    SectorLeakage { sector: usize, leaked: f64 },

    #[error("non-finite value encountered: {0}")]
    NumericDomain(String),

    #[error("mode index {index} out of range for {modes} modes")]
    ModeIndex { index: usize, modes: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("unphysical coupling: 1 + 4g(n+1/2)/Ω = {radicand} is not positive (n = {sector})")]
    UnphysicalCoupling { sector: usize, radicand: f64 },

    #[error("unphysical multimode configuration: Ω² + 4Ω Σ g_j (n_j + 1/2) = {0} is not positive")]
    UnphysicalConfiguration(f64),

    #[error("revival times are undefined for a vacuum cavity state (|α| = 0)")]
    UndefinedRevival,

    #[error("2F1 pole: c = {0} is a non-positive integer")]
    HypergeometricPole(String),

    #[error(
        "2F1 series did not converge after {terms} terms (partial sum {partial}, last term magnitude {last_term:.3e})"
    )]
    Convergence {
        terms: usize,
        partial: String,
        last_term: f64,
    },

    #[error("regime error: {0}")]
    Regime(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
