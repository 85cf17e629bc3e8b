//! Token supply ledger with an append-only mint history.

use serde::{Deserialize, Serialize};

use super::amount::{mul_div, Tokens};
use super::error::{Result, TokenomicsError};

/// Hard supply cap: 99 billion whole tokens.
pub const MAX_CAP: Tokens = Tokens::whole(99_000_000_000);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MintKind {
    Bootstrap,
    User,
    Team,
    Reward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MintRecord {
    pub day: u32,
    pub amount: Tokens,
    pub kind: MintKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupplyLedger {
    pub circulating: Tokens,
    pub team_wallet: Tokens,
    pub max_cap: Tokens,
    /// Cumulative `User` mints; drives team vesting.
    pub user_minted: Tokens,
    pub mint_history: Vec<MintRecord>,
}

impl Default for SupplyLedger {
    fn default() -> Self {
        Self::new(MAX_CAP)
    }
}

impl SupplyLedger {
    pub fn new(max_cap: Tokens) -> Self {
        SupplyLedger {
            circulating: Tokens::ZERO,
            team_wallet: Tokens::ZERO,
            max_cap,
            user_minted: Tokens::ZERO,
            mint_history: Vec::new(),
        }
    }

    pub fn total(&self) -> Tokens {
        self.circulating + self.team_wallet
    }

    pub fn headroom(&self) -> Tokens {
        self.max_cap.saturating_sub(self.total())
    }

    /// Largest team wallet allowed next to `circulating`: `team <= 4% of total` is `24 * team <= circulating`.
    pub fn team_allowance(circulating: Tokens) -> Tokens {
        Tokens(circulating.0 / 24)
    }

    /// Premium owed on a user mint: 4% of it, clamped to the team allowance after the mint.
    pub fn team_premium(&self, user: Tokens) -> Tokens {
        let nominal = Tokens(user.0 * 4 / 100);
        let room = Self::team_allowance(self.circulating + user).saturating_sub(self.team_wallet);
        nominal.min(room)
    }

    /// Appends mints as one unit: all are applied or none.
    pub(crate) fn mint_all(&mut self, day: u32, mints: &[(Tokens, MintKind)]) -> Result<()> {
        let requested: Tokens = mints.iter().map(|m| m.0).sum();
        if requested > self.headroom() {
            return Err(TokenomicsError::CapExceeded {
                requested,
                available: self.headroom(),
            });
        }
        for &(amount, kind) in mints.iter().filter(|m| m.0 > Tokens::ZERO) {
            self.apply(MintRecord { day, amount, kind });
            self.mint_history.push(MintRecord { day, amount, kind });
        }
        Ok(())
    }

    fn apply(&mut self, r: MintRecord) {
        match r.kind {
            MintKind::Team => self.team_wallet += r.amount,
            MintKind::User => {
                self.circulating += r.amount;
                self.user_minted += r.amount;
            }
            MintKind::Bootstrap | MintKind::Reward => self.circulating += r.amount,
        }
    }

    /// Rebuilds balances from a mint history.
    pub fn replay(max_cap: Tokens, history: &[MintRecord]) -> SupplyLedger {
        let mut ledger = SupplyLedger::new(max_cap);
        for &r in history {
            ledger.apply(r);
        }
        ledger.mint_history = history.to_vec();
        ledger
    }

    /// Team tokens vested so far: linear in cumulative user mints, fully vested once user
    /// mints reach the user share of the cap (`max_cap * 100 / 104`).
    pub fn vested_team(&self) -> Result<Tokens> {
        let horizon = mul_div(self.max_cap.0, 100, 104)?;
        if horizon == 0 {
            return Ok(self.team_wallet);
        }
        mul_div(self.team_wallet.0, self.user_minted.0.min(horizon), horizon).map(Tokens)
    }

    pub fn check_invariants(&self) -> Result<()> {
        if self.total() > self.max_cap {
            return Err(TokenomicsError::Invariant(format!(
                "supply {} above cap {}",
                self.total(),
                self.max_cap
            )));
        }
        if self.team_wallet.0 * 24 > self.circulating.0 {
            return Err(TokenomicsError::Invariant(format!(
                "team wallet {} above 4% of supply {}",
                self.team_wallet,
                self.total()
            )));
        }
        Ok(())
    }
}
