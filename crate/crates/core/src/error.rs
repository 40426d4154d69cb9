use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("unsupported Sobolev order {0} (expected 0, 1 or 2)")]
    UnsupportedOrder(usize),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("beta = {beta} lies within 1e-6 of the excluded value {excluded}")]
    Resonance { beta: f64, excluded: f64 },

    #[error("elliptic solver failure: {0}")]
    Solver(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("step rejected: {0}")]
    StepRejected(String),

    #[error("blowup detected; last finite time t = {t_last}")]
    BlowupDetected { t_last: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
