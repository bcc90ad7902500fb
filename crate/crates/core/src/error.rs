use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Vector or matrix dimensions do not line up.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A NaN or infinity appeared while propagating the dynamics.
    #[error("non-finite value produced at step {step}")]
    Divergence { step: usize },

    #[error("configuration error: {0}")]
    Config(String),

    /// An argument lies outside the domain of a formula.
    #[error("domain error: {0}")]
    Domain(String),

    /// The cost blew up under the fixed gradient step.
    #[error(
        "cost diverged at iteration {iteration} (from {from:.4e} to {to:.4e}); \
         reduce the step size gamma (currently {gamma:e})"
    )]
    StepSize {
        gamma: f64,
        iteration: usize,
        from: f64,
        to: f64,
    },

    #[error("running cost is not strongly convex over the sampled region (m_hat = {m_hat:e})")]
    NonConvex { m_hat: f64 },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
