use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Inconsistent grid or field dimensions, malformed descriptors.
    #[error("configuration error: {0}")]
    Config(String),

    /// A documented precondition of an operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A spectral product would wrap around the grid.
    #[error("aliasing risk on axis {axis}: combined band {band} modes reaches Nyquist index {nyquist}")]
    Aliasing {
        axis: usize,
        band: usize,
        nyquist: usize,
    },

    /// Spectral mass not covered by the dyadic blocks of a filter bank.
    #[error("uncovered spectral mass {fraction:.3e} of total; offending modes {modes:?}")]
    UncoveredMass { fraction: f64, modes: Vec<Vec<i64>> },

    /// Non-finite values appeared during a computation.
    #[error("numerical abort at t = {t}: {reason}")]
    Numerical { t: f64, reason: String },

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn pre(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
