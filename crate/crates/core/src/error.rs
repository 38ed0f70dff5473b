use thiserror::Error;

/// Failure modes shared by every module of the engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A word, letter or time index that does not exist.
    #[error("input error: {0}")]
    Input(String),
    /// A request that reaches beyond the materialized data or is otherwise misconfigured.
    #[error("configuration error: {0}")]
    Config(String),
    /// The schedule contradicts its own invariants at a given time.
    #[error("integrity error at time {time}: {message}")]
    Integrity { time: usize, message: String },
    /// A builder was handed data that does not form a valid system.
    #[error("build error: {0}")]
    Build(String),
    /// Contraction, distortion or connector bounds could not be certified.
    #[error("certification error: {0}")]
    Certification(String),
    /// The requested computation exceeds the configured work budget.
    #[error("budget exceeded: {0}")]
    Budget(String),
    /// No sign change of the pressure proxy inside the requested bracket.
    #[error("bracketing error: proxy at t={t_lo} is {p_lo}, at t={t_hi} is {p_hi}")]
    Bracketing { t_lo: f64, t_hi: f64, p_lo: f64, p_hi: f64 },
    /// The operation is not available for this kind of system.
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
