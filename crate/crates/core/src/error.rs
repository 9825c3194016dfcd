use thiserror::Error;

/// Errors raised by the simulators, samplers and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("enumeration budget exceeded: n = {n}, at most {max} supported")]
    BudgetExceeded { n: usize, max: usize },

    #[error("depth {depth} exceeds the cap of {max}")]
    DepthTooLarge { depth: usize, max: usize },

    #[error("not a permutation of 1..n: {0}")]
    InvalidPermutation(String),

    #[error("empty sample")]
    EmptySample,

    #[error("non-finite sample value {0}")]
    NonFinite(f64),

    #[error("contraction condition violated: {0}")]
    NotContracting(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_probability(p: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(Error::InvalidProbability(p))
    }
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
