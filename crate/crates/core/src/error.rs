use thiserror::Error;

/// Errors produced by the numerical routines.
///
/// Parameter problems (`Domain`, `Regime`) are separated from numerical
/// failures so the CLI can map them to distinct exit statuses.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Domain(String),

    #[error("parameter regime violated: {0}")]
    Regime(String),

    #[error(
        "quadrature did not converge: estimate {estimate:e}, achieved error {achieved:e}, requested {requested:e}"
    )]
    Quadrature {
        estimate: f64,
        achieved: f64,
        requested: f64,
    },

    #[error("kernel quadrature failed in operator row {row}: {source}")]
    Assembly {
        row: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("singular linear system (condition estimate {condition:e})")]
    Singular { condition: f64 },

    #[error("iteration did not converge after {iterations} steps (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("non-integrable data: {0}")]
    NotIntegrable(String),

    #[error("integration blew up at r = {radius:e}")]
    Blowup { radius: f64 },
}

impl Error {
    /// True for errors caused by bad input rather than numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::Domain(_) | Error::Regime(_) | Error::NotIntegrable(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
