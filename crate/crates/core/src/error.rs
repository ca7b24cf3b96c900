//! Error type shared by all physics modules.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An argument is outside the physical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An input structure violates a documented invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// An iterative solve ran out of its step budget. The bracket holds the
    /// range the state oscillated over when the budget was exhausted.
    #[error("{context}: no convergence after {steps} steps (state bracket [{}, {}])", bracket.0, bracket.1)]
    NonConvergence {
        context: String,
        steps: u64,
        bracket: (f64, f64),
    },

    /// A quadrature or root-find could not reach the requested tolerance.
    #[error("{context}: requested tolerance {requested:e}, achieved {achieved:e}")]
    Numerical {
        context: String,
        requested: f64,
        achieved: f64,
    },

    /// A solve target cannot be met anywhere in the allowed range.
    #[error("infeasible target: {0}")]
    Infeasible(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub fn infeasible(msg: impl Into<String>) -> Self {
        Error::Infeasible(msg.into())
    }
}
