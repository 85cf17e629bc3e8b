use thiserror::Error;

use super::amount::Tokens;

/// Errors raised by the token economy.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TokenomicsError {
    #[error("domain error in `{field}`: {reason}")]
    Domain { field: String, reason: String },

    #[error("policy violation: {0}")]
    Policy(String),

    #[error("mint of {requested} tokens would exceed the supply cap ({available} left)")]
    CapExceeded {
        requested: Tokens,
        available: Tokens,
    },

    #[error("ledger already holds mints; bootstrap refused")]
    AlreadyBootstrapped,

    #[error("pool paused by the safeguard since day {since}")]
    Paused { since: u32 },

    #[error("pool has no liquidity")]
    NotLive,

    #[error("amount rounds to zero")]
    Dust,

    #[error("provider `{provider}` holds {held} shares, {requested} requested")]
    InsufficientShares {
        provider: String,
        held: u128,
        requested: u128,
    },

    #[error("day {day} does not follow day {last}")]
    Clock { day: u32, last: u32 },

    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),

    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl TokenomicsError {
    pub(crate) fn domain(field: impl Into<String>, reason: impl Into<String>) -> Self {
        TokenomicsError::Domain {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Errors that reject a single scripted action but leave the economy usable.
    pub fn is_rejection(&self) -> bool {
        !matches!(
            self,
            TokenomicsError::Overflow(_) | TokenomicsError::Invariant(_)
        )
    }
}

pub type Result<T, E = TokenomicsError> = std::result::Result<T, E>;
