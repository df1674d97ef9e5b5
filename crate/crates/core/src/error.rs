use thiserror::Error;

/// Errors produced by the numerical routines and the model/solution loaders.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("insufficient sampling: {0}")]
    Sampling(String),

    #[error("frequency {frequency} cannot be classified: {reason}")]
    Classification { frequency: f64, reason: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("resolvent is near-singular: distance to spectrum {distance:e} (guard {guard:e})")]
    NearSingular { distance: f64, guard: f64 },

    #[error(
        "resonant forcing: frequency {frequency} maps to angle {angle} which meets the multiplier at angle {multiplier_angle}"
    )]
    Resonant {
        frequency: f64,
        angle: f64,
        multiplier_angle: f64,
    },

    #[error("near-resonant forcing (separation {separation:e}); pass force to solve anyway")]
    NearResonant { separation: f64 },

    #[error("no epsilon-period found below search horizon {horizon}")]
    SearchFailure { horizon: f64 },

    #[error("eigenvalue computation failed: {0}")]
    Eigen(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
