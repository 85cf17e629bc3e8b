//! Constant-product liquidity pool of tokens against the reference currency.

use std::collections::BTreeMap;

use ethnum::U256;
use serde::{Deserialize, Serialize};

use super::amount::{mul_div, u128_str, Money, Price, Rate, Tokens, WAD};
use super::error::{Result, TokenomicsError};
use super::safeguard::SlidingMax;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwapDirection {
    /// Sell tokens for money.
    TokenIn,
    /// Buy tokens with money.
    QuoteIn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SwapOutcome {
    #[serde(serialize_with = "u128_str")]
    pub amount_in: u128,
    #[serde(serialize_with = "u128_str")]
    pub fee: u128,
    #[serde(serialize_with = "u128_str")]
    pub amount_out: u128,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolState {
    pub reserve_token: Tokens,
    pub reserve_quote: Money,
    pub lp_shares: BTreeMap<String, u128>,
    pub total_shares: u128,
    pub paused: bool,
    /// Day the current pause began.
    pub paused_since: Option<u32>,
    /// `(day, spot price)` in wad.
    pub spot_price_history: Vec<(u32, Price)>,
    #[serde(skip)]
    monitor: SlidingMax,
}

impl PoolState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_live(&self) -> bool {
        self.total_shares > 0 && self.reserve_token.0 > 0 && self.reserve_quote.0 > 0
    }

    /// Constant-product value `reserve_token * reserve_quote`.
    pub fn k(&self) -> U256 {
        U256::from(self.reserve_token.0) * U256::from(self.reserve_quote.0)
    }

    /// Marginal price, money per token.
    pub fn spot_price(&self) -> Option<Price> {
        self.is_live().then(|| {
            Price(mul_div(self.reserve_quote.0, WAD, self.reserve_token.0).unwrap_or(u128::MAX))
        })
    }

    /// Deposits both assets and returns the shares issued. The first deposit issues
    /// `isqrt(tokens * quote)`; later ones issue the smaller of the two proportional
    /// amounts, any excess staying in the pool.
    pub fn add_liquidity(&mut self, provider: &str, tokens: Tokens, quote: Money) -> Result<u128> {
        if tokens.0 == 0 || quote.0 == 0 {
            return Err(TokenomicsError::domain(
                "liquidity",
                "both amounts must be positive",
            ));
        }
        let shares = if self.is_live() {
            mul_div(tokens.0, self.total_shares, self.reserve_token.0)?.min(mul_div(
                quote.0,
                self.total_shares,
                self.reserve_quote.0,
            )?)
        } else {
            let product = tokens
                .0
                .checked_mul(quote.0)
                .ok_or(TokenomicsError::Overflow("initial liquidity"))?;
            product.isqrt()
        };
        if shares == 0 {
            return Err(TokenomicsError::Dust);
        }
        if !self.is_live() {
            // Leftovers from a fully drained pool go to the new first provider.
            self.total_shares = 0;
            self.lp_shares.clear();
        }
        self.reserve_token += tokens;
        self.reserve_quote += quote;
        self.total_shares += shares;
        *self.lp_shares.entry(provider.to_string()).or_default() += shares;
        Ok(shares)
    }

    /// Burns `shares` held by `provider` and returns its pro-rata reserves, rounded down.
    pub fn remove_liquidity(&mut self, provider: &str, shares: u128) -> Result<(Tokens, Money)> {
        let held = self.lp_shares.get(provider).copied().unwrap_or(0);
        if shares == 0 || shares > held {
            return Err(TokenomicsError::InsufficientShares {
                provider: provider.to_string(),
                held,
                requested: shares,
            });
        }
        let tokens = Tokens(mul_div(self.reserve_token.0, shares, self.total_shares)?);
        let quote = Money(mul_div(self.reserve_quote.0, shares, self.total_shares)?);
        self.reserve_token = self.reserve_token - tokens;
        self.reserve_quote = self.reserve_quote - quote;
        self.total_shares -= shares;
        if held == shares {
            self.lp_shares.remove(provider);
        } else {
            self.lp_shares.insert(provider.to_string(), held - shares);
        }
        Ok((tokens, quote))
    }

    /// Output of a swap without executing it. The fee is rounded up, the output down.
    pub fn quote_swap(
        &self,
        amount_in: u128,
        direction: SwapDirection,
        fee: Rate,
    ) -> Result<SwapOutcome> {
        if !self.is_live() {
            return Err(TokenomicsError::NotLive);
        }
        if amount_in == 0 {
            return Err(TokenomicsError::domain("amount_in", "must be positive"));
        }
        let (r_in, r_out) = match direction {
            SwapDirection::TokenIn => (self.reserve_token.0, self.reserve_quote.0),
            SwapDirection::QuoteIn => (self.reserve_quote.0, self.reserve_token.0),
        };
        let fee_amount = fee.of_ceil(amount_in)?.min(amount_in);
        let a = amount_in - fee_amount;
        let den = r_in
            .checked_add(a)
            .ok_or(TokenomicsError::Overflow("swap"))?;
        let amount_out = mul_div(r_out, a, den)?;
        if amount_out == 0 {
            return Err(TokenomicsError::Dust);
        }
        Ok(SwapOutcome {
            amount_in,
            fee: fee_amount,
            amount_out,
        })
    }

    pub fn swap(
        &mut self,
        amount_in: u128,
        direction: SwapDirection,
        fee: Rate,
    ) -> Result<SwapOutcome> {
        if self.paused {
            return Err(TokenomicsError::Paused {
                since: self.paused_since.unwrap_or(0),
            });
        }
        let out = self.quote_swap(amount_in, direction, fee)?;
        let k_before = self.k();
        match direction {
            SwapDirection::TokenIn => {
                self.reserve_token += Tokens(out.amount_in);
                self.reserve_quote = self.reserve_quote - Money(out.amount_out);
            }
            SwapDirection::QuoteIn => {
                self.reserve_quote += Money(out.amount_in);
                self.reserve_token = self.reserve_token - Tokens(out.amount_out);
            }
        }
        let k_after = self.k();
        if k_after < k_before || (out.fee > 0 && k_after == k_before) {
            return Err(TokenomicsError::Invariant(format!(
                "swap moved k from {k_before} to {k_after}"
            )));
        }
        Ok(out)
    }

    /// Records today's spot price (if the pool is live) and returns whether it breaches the
    /// trailing-week safeguard threshold.
    pub fn record_spot(&mut self, day: u32) -> Option<bool> {
        let spot = self.spot_price()?;
        self.spot_price_history.push((day, spot));
        Some(self.monitor.push(day, spot.wad()))
    }

    pub fn check_invariants(&self) -> Result<()> {
        let sum: u128 = self.lp_shares.values().sum();
        if sum != self.total_shares {
            return Err(TokenomicsError::Invariant(format!(
                "LP shares sum to {sum}, total is {}",
                self.total_shares
            )));
        }
        if self.lp_shares.values().any(|&s| s == 0) {
            return Err(TokenomicsError::Invariant("zero-share LP entry".into()));
        }
        if self.total_shares > 0 && (self.reserve_token.0 == 0 || self.reserve_quote.0 == 0) {
            return Err(TokenomicsError::Invariant(
                "live pool with an empty reserve".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pool(t: u128, q: u128) -> PoolState {
        let mut p = PoolState::new();
        p.add_liquidity("lp", Tokens(t), Money(q)).unwrap();
        p
    }

    #[test]
    fn symmetric_pool_without_fee_halves() {
        let mut p = pool(1_000_000, 1_000_000);
        let out = p
            .swap(1_000_000, SwapDirection::TokenIn, Rate::ZERO)
            .unwrap();
        assert_eq!(out.amount_out, 500_000);
    }

    #[test]
    fn small_trades_execute_at_spot() {
        let p = pool(4_000_000_000_000, 8_000_000_000_000);
        let out = p
            .quote_swap(1_000, SwapDirection::TokenIn, Rate::ZERO)
            .unwrap();
        assert!((out.amount_out as f64 / 1_000.0 - 2.0).abs() < 1e-2);
        assert_eq!(p.spot_price().unwrap(), Price(2 * WAD));
    }

    #[test]
    fn fee_makes_k_grow() {
        let mut p = pool(10_000_000, 30_000_000);
        let k0 = p.k();
        let fee = Rate::from_nanos(300_000);
        let out = p.swap(5_000, SwapDirection::QuoteIn, fee).unwrap();
        assert_eq!(out.fee, 2);
        assert!(p.k() > k0);
    }

    #[test]
    fn dust_and_pause_are_rejected() {
        let mut p = pool(1_000_000_000, 1_000);
        assert_eq!(
            p.swap(1, SwapDirection::TokenIn, Rate::ZERO),
            Err(TokenomicsError::Dust)
        );
        p.paused = true;
        p.paused_since = Some(4);
        assert_eq!(
            p.swap(10, SwapDirection::QuoteIn, Rate::ZERO),
            Err(TokenomicsError::Paused { since: 4 })
        );
    }

    #[test]
    fn liquidity_round_trip() {
        let mut p = pool(1_000_000, 4_000_000);
        assert_eq!(p.total_shares, 2_000_000);
        let s = p
            .add_liquidity("b", Tokens(500_000), Money(2_000_000))
            .unwrap();
        assert_eq!(s, 1_000_000);
        p.check_invariants().unwrap();
        let (t, q) = p.remove_liquidity("b", s).unwrap();
        assert_eq!((t, q), (Tokens(500_000), Money(2_000_000)));
        assert!(p.remove_liquidity("b", 1).is_err());
        p.remove_liquidity("lp", 2_000_000).unwrap();
        assert!(!p.is_live());
        p.check_invariants().unwrap();
    }
}
