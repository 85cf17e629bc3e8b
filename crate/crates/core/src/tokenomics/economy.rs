//! The token economy as a single-writer state machine.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::amount::{mul_div, Money, Price, Rate, Tokens, WAD};
use super::error::{Result, TokenomicsError};
use super::fees::{FeeSchedule, ManagementAccrual};
use super::log::EventLog;
use super::pool::{PoolState, SwapDirection, SwapOutcome};
use super::safeguard::UnpauseMode;
use super::supply::{MintKind, SupplyLedger, MAX_CAP};
use super::vault::VaultState;

/// Tokens minted against the founder deposit.
pub const BOOTSTRAP_TOKENS: Tokens = Tokens::whole(250_000);

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeeDestination {
    #[default]
    Operator,
    Vault,
}

mod decimal {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::tokenomics::amount::{Price, Tokens, MICRO};

    pub mod price {
        use super::*;

        pub fn serialize<S: Serializer>(p: &Price, s: S) -> Result<S::Ok, S::Error> {
            s.serialize_f64(p.to_f64())
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Price, D::Error> {
            Price::from_decimal("price", f64::deserialize(d)?).map_err(serde::de::Error::custom)
        }
    }

    /// Whole tokens as a decimal.
    pub mod tokens {
        use super::*;

        pub fn serialize<S: Serializer>(t: &Tokens, s: S) -> Result<S::Ok, S::Error> {
            s.serialize_f64((t.micros() / MICRO) as f64)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Tokens, D::Error> {
            Tokens::from_decimal("tokens", f64::deserialize(d)?).map_err(serde::de::Error::custom)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Policy {
    /// Share of the reserve kept in the traditional compartment at each rebalance.
    pub target_cefi_fraction: Rate,
    #[serde(with = "decimal::price")]
    pub initial_reference_price: Price,
    pub entry_fee_destination: FeeDestination,
    pub unpause: UnpauseMode,
    /// Share of the net monthly gain minted as rewards.
    pub reward_share: Rate,
    #[serde(with = "decimal::tokens")]
    pub max_cap: Tokens,
    pub month_days: u32,
}

impl Default for Policy {
    fn default() -> Self {
        Policy {
            target_cefi_fraction: Rate::from_nanos(500_000_000),
            initial_reference_price: Price::ONE,
            entry_fee_destination: FeeDestination::Operator,
            unpause: UnpauseMode::Automatic,
            reward_share: Rate::ONE,
            max_cap: MAX_CAP,
            month_days: 30,
        }
    }
}

impl Policy {
    pub fn violations(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        if self.target_cefi_fraction < super::vault::MIN_CEFI_FRACTION
            || self.target_cefi_fraction > Rate::ONE
        {
            out.push((
                "target_cefi_fraction".into(),
                format!("must lie in [0.5, 1], got {}", self.target_cefi_fraction),
            ));
        }
        if self.reward_share > Rate::ONE {
            out.push((
                "reward_share".into(),
                format!("must not exceed 1, got {}", self.reward_share),
            ));
        }
        if self.max_cap < BOOTSTRAP_TOKENS {
            out.push(("max_cap".into(), "must allow the bootstrap mint".into()));
        }
        if self.month_days == 0 {
            out.push(("month_days".into(), "must be positive".into()));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PurchaseOutcome {
    pub entry_fee: Money,
    pub credited: Money,
    pub tokens_to_user: Tokens,
    pub tokens_to_team: Tokens,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PendingPurchase {
    pub id: u64,
    pub fiat: Money,
    pub submitted: u32,
    pub settlement_day: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochReport {
    pub month: u32,
    pub day: u32,
    pub nav_return: f64,
    pub performance_rate: Rate,
    pub performance_fee_taken: Money,
    pub management_fee_taken: Money,
    pub rewards_minted: Tokens,
    /// The reward mint was cut to the remaining cap.
    pub reward_clamped: bool,
    pub distribution: BTreeMap<String, Tokens>,
    /// `rewards_minted` minus the distributed total.
    pub dust: Tokens,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TickEvent {
    Minted { id: u64, outcome: PurchaseOutcome },
    Deferred { id: u64, settlement_day: u32 },
    Refused { id: u64, reason: String },
    Spot { price: Price, breach: bool },
    Paused,
    Unpaused,
    Epoch(EpochReport),
}

/// Splits `total` pro-rata to `shares`; leftover micro-tokens go to the largest
/// remainders (ties to the smaller key), so the parts sum to `total` exactly.
pub fn distribute(
    total: Tokens,
    shares: &BTreeMap<String, u128>,
) -> Result<BTreeMap<String, Tokens>> {
    let all: u128 = shares.values().sum();
    if all == 0 {
        return Ok(BTreeMap::new());
    }
    let mut parts = Vec::with_capacity(shares.len());
    for (k, &s) in shares {
        let whole = mul_div(total.0, s, all)?;
        let rem = ethnum::U256::from(total.0) * ethnum::U256::from(s) % ethnum::U256::from(all);
        parts.push((k.clone(), whole, rem));
    }
    let left = total.0 - parts.iter().map(|p| p.1).sum::<u128>();
    let mut order: Vec<usize> = (0..parts.len()).collect();
    order.sort_by(|&a, &b| parts[b].2.cmp(&parts[a].2).then(a.cmp(&b)));
    for &i in order.iter().take(left as usize) {
        parts[i].1 += 1;
    }
    Ok(parts.into_iter().map(|(k, v, _)| (k, Tokens(v))).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Economy {
    pub vault: VaultState,
    pub ledger: SupplyLedger,
    pub pool: PoolState,
    pub fees: FeeSchedule,
    pub policy: Policy,
    pub reference_price: Price,
    /// Fees paid out of the economy.
    pub operator: Money,
    pub pending: Vec<PendingPurchase>,
    pub reports: Vec<EpochReport>,
    #[serde(skip)]
    pub log: EventLog,
    accrual: ManagementAccrual,
    epoch_open: Money,
    epoch_inflows: Money,
    last_tick: Option<u32>,
    next_purchase: u64,
    check_every_op: bool,
}

impl Economy {
    pub fn new(fees: FeeSchedule, policy: Policy) -> Result<Self> {
        if let Some((field, reason)) = fees
            .violations()
            .into_iter()
            .chain(policy.violations())
            .next()
        {
            return Err(TokenomicsError::Domain { field, reason });
        }
        Ok(Economy {
            vault: VaultState::new(),
            ledger: SupplyLedger::new(policy.max_cap),
            pool: PoolState::new(),
            reference_price: policy.initial_reference_price,
            fees,
            policy,
            operator: Money::ZERO,
            pending: Vec::new(),
            reports: Vec::new(),
            log: EventLog::default(),
            accrual: ManagementAccrual::default(),
            epoch_open: Money::ZERO,
            epoch_inflows: Money::ZERO,
            last_tick: None,
            next_purchase: 0,
            check_every_op: false,
        })
    }

    /// Runs [`Economy::check_invariants`] after every successful operation.
    pub fn with_invariant_checks(mut self) -> Self {
        self.check_every_op = true;
        self
    }

    fn balances(&self) -> String {
        let (v, l, p) = (&self.vault, &self.ledger, &self.pool);
        format!(
            "{}|{}|{}|{}|{}|{}|{}|{}|{}|{}|{}|{}",
            l.circulating.0,
            l.team_wallet.0,
            v.fiat.0,
            v.a.units,
            v.a.nav.wad(),
            v.c.units,
            v.c.nav.wad(),
            p.reserve_token.0,
            p.reserve_quote.0,
            p.total_shares,
            p.paused,
            self.operator.0
        )
    }

    fn note(&mut self, day: u32, op: &str, args: Value) -> Result<()> {
        let b = self.balances();
        self.log.push(day, op, args, &b);
        if self.check_every_op {
            self.check_invariants()?;
        }
        Ok(())
    }

    /// Logs the outcome of an operation; rejections are logged as `<op>_rejected`.
    fn settle<T: Serialize>(
        &mut self,
        day: u32,
        op: &str,
        mut args: Value,
        res: Result<T>,
    ) -> Result<T> {
        match res {
            Ok(v) => {
                args["result"] = serde_json::to_value(&v).unwrap_or(Value::Null);
                self.note(day, op, args)?;
                Ok(v)
            }
            Err(e) if e.is_rejection() => {
                args["reason"] = Value::String(e.to_string());
                let b = self.balances();
                self.log.push(day, &format!("{op}_rejected"), args, &b);
                Err(e)
            }
            Err(e) => Err(e),
        }
    }

    pub fn bootstrap(&mut self, day: u32) -> Result<Tokens> {
        let res = (|| {
            if !self.ledger.mint_history.is_empty() {
                return Err(TokenomicsError::AlreadyBootstrapped);
            }
            let deposit = self.reference_price.value_of(BOOTSTRAP_TOKENS)?;
            self.ledger
                .mint_all(day, &[(BOOTSTRAP_TOKENS, MintKind::Bootstrap)])?;
            self.vault.deposit(deposit);
            self.epoch_inflows += deposit;
            Ok(BOOTSTRAP_TOKENS)
        })();
        self.settle(day, "bootstrap", json!({}), res)
    }

    /// Entry fee first, then the user mint at `reference_price`, then the team premium.
    pub fn process_primary_purchase(
        &mut self,
        day: u32,
        fiat_in: Money,
        reference_price: Price,
    ) -> Result<PurchaseOutcome> {
        let res = self.purchase(day, fiat_in, reference_price);
        self.settle(
            day,
            "purchase",
            json!({ "fiat_in": fiat_in, "reference_price": reference_price }),
            res,
        )
    }

    fn purchase(
        &mut self,
        day: u32,
        fiat_in: Money,
        reference_price: Price,
    ) -> Result<PurchaseOutcome> {
        if fiat_in == Money::ZERO {
            return Err(TokenomicsError::domain("fiat_in", "must be positive"));
        }
        if reference_price.wad() == 0 {
            return Err(TokenomicsError::domain(
                "reference_price",
                "must be positive",
            ));
        }
        let entry_fee = Money(self.fees.entry_fee.of(fiat_in.0)?);
        let net = fiat_in - entry_fee;
        let user = reference_price.tokens_for(net)?;
        if user == Tokens::ZERO {
            return Err(TokenomicsError::Dust);
        }
        let team = self.ledger.team_premium(user);
        self.ledger
            .mint_all(day, &[(user, MintKind::User), (team, MintKind::Team)])?;
        let credited = match self.policy.entry_fee_destination {
            FeeDestination::Operator => {
                self.operator += entry_fee;
                net
            }
            FeeDestination::Vault => fiat_in,
        };
        self.vault.deposit(credited);
        self.epoch_inflows += credited;
        Ok(PurchaseOutcome {
            entry_fee,
            credited,
            tokens_to_user: user,
            tokens_to_team: team,
        })
    }

    /// Queues a purchase whose fiat reaches the vault account on `settlement_day`.
    pub fn submit_purchase(&mut self, day: u32, fiat: Money, settlement_day: u32) -> Result<u64> {
        let res = if fiat == Money::ZERO {
            Err(TokenomicsError::domain("fiat", "must be positive"))
        } else if settlement_day < day {
            Err(TokenomicsError::domain(
                "settlement_day",
                "must not precede submission",
            ))
        } else {
            let id = self.next_purchase;
            self.next_purchase += 1;
            self.pending.push(PendingPurchase {
                id,
                fiat,
                submitted: day,
                settlement_day,
            });
            Ok(id)
        };
        self.settle(
            day,
            "submit_purchase",
            json!({ "fiat": fiat, "settlement_day": settlement_day }),
            res,
        )
    }

    pub fn set_reference_price(&mut self, day: u32, price: Price) -> Result<()> {
        let res = if price.wad() == 0 {
            Err(TokenomicsError::domain(
                "reference_price",
                "must be positive",
            ))
        } else {
            self.reference_price = price;
            Ok(())
        };
        self.settle(day, "reference_price", json!({ "price": price }), res)
    }

    pub fn allocate_reserves(&mut self, day: u32, target_cefi_fraction: Rate) -> Result<()> {
        let res = self.vault.allocate_reserves(target_cefi_fraction);
        self.settle(
            day,
            "allocate",
            json!({ "target_cefi_fraction": target_cefi_fraction.to_f64() }),
            res,
        )
    }

    pub fn advance_nav(&mut self, day: u32, a_return: f64, c_return: f64) -> Result<()> {
        let res = self.vault.advance_nav(a_return, c_return);
        self.settle(
            day,
            "nav",
            json!({ "a_return": a_return, "c_return": c_return }),
            res,
        )
    }

    fn outside_pool(&self) -> Tokens {
        self.ledger
            .circulating
            .saturating_sub(self.pool.reserve_token)
    }

    /// Provider deposits come from circulating tokens held outside the pool.
    pub fn add_liquidity(
        &mut self,
        day: u32,
        provider: &str,
        tokens: Tokens,
        quote: Money,
    ) -> Result<u128> {
        let res = if tokens > self.outside_pool() {
            Err(TokenomicsError::Policy(format!(
                "only {} tokens circulate outside the pool",
                self.outside_pool()
            )))
        } else {
            self.pool.add_liquidity(provider, tokens, quote)
        };
        let res = res.map(|shares| shares.to_string());
        self.settle(
            day,
            "add_liquidity",
            json!({ "provider": provider, "tokens": tokens, "quote": quote }),
            res,
        )
        .map(|shares| shares.parse().expect("share count"))
    }

    pub fn remove_liquidity(
        &mut self,
        day: u32,
        provider: &str,
        shares: u128,
    ) -> Result<(Tokens, Money)> {
        let res = self.pool.remove_liquidity(provider, shares);
        self.settle(
            day,
            "remove_liquidity",
            json!({ "provider": provider, "shares": shares.to_string() }),
            res,
        )
    }

    pub fn swap(
        &mut self,
        day: u32,
        amount_in: u128,
        direction: SwapDirection,
    ) -> Result<SwapOutcome> {
        let res = if direction == SwapDirection::TokenIn && Tokens(amount_in) > self.outside_pool()
        {
            Err(TokenomicsError::Policy(format!(
                "only {} tokens circulate outside the pool",
                self.outside_pool()
            )))
        } else {
            self.pool.swap(amount_in, direction, self.fees.swap_fee)
        };
        self.settle(
            day,
            "swap",
            json!({ "amount_in": amount_in.to_string(), "direction": direction }),
            res,
        )
    }

    /// Lifts a safeguard pause by hand.
    pub fn release_pause(&mut self, day: u32) -> Result<()> {
        let res = if self.pool.paused {
            self.pool.paused = false;
            self.pool.paused_since = None;
            Ok(())
        } else {
            Err(TokenomicsError::Policy("pool is not paused".into()))
        };
        self.settle(day, "release_pause", json!({}), res)
    }

    /// End-of-day processing: settles due purchases, records the spot price, applies the
    /// safeguard and closes the month on its last day.
    pub fn daily_oracle_tick(&mut self, day: u32) -> Result<Vec<TickEvent>> {
        if let Some(last) = self.last_tick {
            if day <= last {
                return Err(TokenomicsError::Clock { day, last });
            }
        }
        self.last_tick = Some(day);
        let mut events = Vec::new();
        for p in std::mem::take(&mut self.pending) {
            if p.settlement_day > day {
                events.push(TickEvent::Deferred {
                    id: p.id,
                    settlement_day: p.settlement_day,
                });
                self.note(
                    day,
                    "defer",
                    json!({ "id": p.id, "settlement_day": p.settlement_day }),
                )?;
                self.pending.push(p);
                continue;
            }
            match self.process_primary_purchase(day, p.fiat, self.reference_price) {
                Ok(outcome) => events.push(TickEvent::Minted { id: p.id, outcome }),
                Err(e) if e.is_rejection() => events.push(TickEvent::Refused {
                    id: p.id,
                    reason: e.to_string(),
                }),
                Err(e) => return Err(e),
            }
        }
        if let Some(breach) = self.pool.record_spot(day) {
            let price = self.pool.spot_price().unwrap_or(Price(0));
            events.push(TickEvent::Spot { price, breach });
            self.note(day, "spot", json!({ "price": price, "breach": breach }))?;
            if breach && !self.pool.paused {
                self.pool.paused = true;
                self.pool.paused_since = Some(day);
                events.push(TickEvent::Paused);
                self.note(day, "pause", json!({}))?;
            } else if !breach && self.pool.paused && self.policy.unpause == UnpauseMode::Automatic {
                self.pool.paused = false;
                self.pool.paused_since = None;
                events.push(TickEvent::Unpaused);
                self.note(day, "unpause", json!({}))?;
            }
        }
        if (day + 1).is_multiple_of(self.policy.month_days) {
            let month = self.reports.len() as u32;
            events.push(TickEvent::Epoch(self.monthly_rewards(day, month)?));
        }
        Ok(events)
    }

    /// Monthly close: fees on the month's return, reward mint to liquidity providers,
    /// rebalance to the target allocation.
    pub fn monthly_rewards(&mut self, day: u32, month: u32) -> Result<EpochReport> {
        let res = self.close_month(day, month);
        let report = self.settle(day, "epoch", json!({ "month": month }), res)?;
        self.reports.push(report.clone());
        Ok(report)
    }

    fn close_month(&mut self, day: u32, month: u32) -> Result<EpochReport> {
        if month != self.reports.len() as u32 {
            return Err(TokenomicsError::domain(
                "month",
                format!("expected month {}", self.reports.len()),
            ));
        }
        let pledged = self.vault.pledged_value()?;
        let base = self.epoch_open + self.epoch_inflows;
        let gain = pledged.checked_sub(base).unwrap_or(Money::ZERO);
        let nav_return = if base.0 == 0 {
            0.0
        } else {
            (pledged.0 as f64 - base.0 as f64) / base.0 as f64
        };

        let mut accrual = self.accrual;
        let management = accrual.monthly(pledged, self.fees.management_fee_annual)?;
        let performance_rate = if gain > Money::ZERO {
            self.fees.performance_rate(gain, base)
        } else {
            Rate::ZERO
        };
        let performance = Money(performance_rate.of(gain.0)?);

        let mut vault = self.vault.clone();
        let owed = performance + management;
        vault.raise_fiat(owed)?;
        let taken = owed.min(vault.fiat);
        vault.withdraw(taken)?;
        let performance_fee_taken = performance.min(taken);
        let management_fee_taken = taken - performance_fee_taken;

        let net_gain = gain.saturating_sub(owed);
        let reward_value = Money(self.policy.reward_share.of(net_gain.0)?);
        let mut rewards = if self.pool.total_shares > 0 {
            self.reference_price.tokens_for(reward_value)?
        } else {
            Tokens::ZERO
        };
        let reward_clamped = rewards > self.ledger.headroom();
        rewards = rewards.min(self.ledger.headroom());
        let distribution = distribute(rewards, &self.pool.lp_shares)?;
        let dust = rewards - distribution.values().copied().sum();

        vault.allocate_reserves(self.policy.target_cefi_fraction)?;
        self.ledger.mint_all(day, &[(rewards, MintKind::Reward)])?;
        self.epoch_open = vault.pledged_value()?;
        self.vault = vault;
        self.accrual = accrual;
        self.operator += taken;
        self.epoch_inflows = Money::ZERO;
        Ok(EpochReport {
            month,
            day,
            nav_return,
            performance_rate,
            performance_fee_taken,
            management_fee_taken,
            rewards_minted: rewards,
            reward_clamped,
            distribution,
            dust,
        })
    }

    /// Pledged value per circulating token; vested team tokens count as circulating.
    pub fn redemption_value(&self) -> Result<Price> {
        let denominator = self.ledger.circulating + self.ledger.vested_team()?;
        if denominator == Tokens::ZERO {
            return Err(TokenomicsError::domain(
                "circulating",
                "no tokens in circulation",
            ));
        }
        mul_div(self.vault.pledged_value()?.0, WAD, denominator.0).map(Price)
    }

    pub fn check_invariants(&self) -> Result<()> {
        self.ledger.check_invariants()?;
        self.vault.check_identity()?;
        self.pool.check_invariants()?;
        if self.pool.reserve_token > self.ledger.circulating {
            return Err(TokenomicsError::Invariant(
                "pool holds more tokens than circulate".into(),
            ));
        }
        if let Ok(rv) = self.redemption_value() {
            let denominator = self.ledger.circulating + self.ledger.vested_team()?;
            let back = mul_div(rv.wad(), denominator.0, WAD)?;
            let pledged = self.vault.pledged_value()?.0;
            if pledged.abs_diff(back) > 1 {
                return Err(TokenomicsError::Invariant(format!(
                    "redemption value reconciles to {back}, pledged is {pledged}"
                )));
            }
        }
        Ok(())
    }
}
