use thiserror::Error;

use crate::model::Regime;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A model parameter or argument is outside its admissible range.
    #[error("invalid {field}: {reason}")]
    Domain { field: &'static str, reason: String },

    /// The socially optimal strategy sits on a boundary, so no fee can bind.
    #[error("no interior social optimum (social regime {regime:?}, q_s = {q_s}); an admission fee cannot align the equilibrium")]
    NoInteriorOptimum { regime: Regime, q_s: f64 },

    #[error("stationary solve failed: {0}")]
    Solve(String),

    #[error("invalid simulation config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn domain(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            field,
            reason: reason.into(),
        }
    }
}
