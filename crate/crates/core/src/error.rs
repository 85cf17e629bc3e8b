use thiserror::Error;

/// Errors raised by the continuous models (statistics, equilibria, market clearing).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    /// An argument lies outside the domain where the formula is defined.
    #[error("domain error in `{field}`: {reason}")]
    Domain { field: String, reason: String },

    /// An iterative solver failed to reach its tolerance.
    #[error("no convergence after {iterations} iterations (best residual {best_residual:e})")]
    Convergence {
        iterations: usize,
        best_residual: f64,
    },

    /// Aggregate excess demand is not strictly decreasing, so no bracketed root exists.
    #[error("excess demand has non-negative slope {slope:e}; no bracketable clearing price")]
    Structural { slope: f64 },
}

impl ModelError {
    pub(crate) fn domain(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ModelError::Domain {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;
