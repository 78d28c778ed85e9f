use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or input structure violates its documented range.
    #[error("invalid input: {0}")]
    Validation(String),

    /// A finite population could not be built from the requested law.
    #[error("infeasible construction: {0}")]
    Construction(String),

    /// A scaled time or fraction outside the domain of the limiting system.
    #[error("domain error: {0}")]
    Domain(String),

    /// An exhaustive enumeration was asked for on an instance that is too large.
    #[error("instance too large for exhaustive enumeration: m = {m} > {limit}")]
    TooLarge { m: u64, limit: u64 },

    /// A caller broke a sequencing contract (e.g. stepping a finished process).
    #[error("logic error: {0}")]
    Logic(String),

    /// The optimisation problem has no usable solution for a prediction.
    #[error("no prediction: {0}")]
    Unstable(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}
