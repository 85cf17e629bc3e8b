//! Fee schedule: swap, entry, management and tiered performance fees.

use serde::{Deserialize, Serialize};

use super::amount::{Money, Rate, NANO};
use super::error::{Result, TokenomicsError};

/// Performance-fee bracket `[lower, upper)` on the monthly return; `upper = None` is unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tier {
    pub lower: Rate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<Rate>,
    pub rate: Rate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeeSchedule {
    pub swap_fee: Rate,
    pub entry_fee: Rate,
    pub management_fee_annual: Rate,
    pub performance_tiers: Vec<Tier>,
}

impl Default for FeeSchedule {
    fn default() -> Self {
        let r = Rate::from_nanos;
        FeeSchedule {
            swap_fee: r(300_000),
            entry_fee: r(50_000_000),
            management_fee_annual: r(20_000_000),
            performance_tiers: vec![
                Tier {
                    lower: r(0),
                    upper: Some(r(90_000_000)),
                    rate: r(100_000_000),
                },
                Tier {
                    lower: r(90_000_000),
                    upper: Some(r(200_000_000)),
                    rate: r(150_000_000),
                },
                Tier {
                    lower: r(200_000_000),
                    upper: None,
                    rate: r(250_000_000),
                },
            ],
        }
    }
}

impl FeeSchedule {
    /// Every problem with the schedule, as `(field, reason)` pairs.
    pub fn violations(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for (name, rate) in [
            ("swap_fee", self.swap_fee),
            ("entry_fee", self.entry_fee),
            ("management_fee_annual", self.management_fee_annual),
        ] {
            if rate >= Rate::ONE {
                out.push((name.to_string(), format!("must be below 1, got {rate}")));
            }
        }
        let tiers = &self.performance_tiers;
        if tiers.is_empty() {
            out.push(("performance_tiers".into(), "must not be empty".into()));
            return out;
        }
        if tiers[0].lower != Rate::ZERO {
            out.push((
                "performance_tiers[0].lower".into(),
                "first tier must start at 0".into(),
            ));
        }
        for (i, t) in tiers.iter().enumerate() {
            let path = format!("performance_tiers[{i}]");
            if t.rate > Rate::ONE {
                out.push((
                    format!("{path}.rate"),
                    format!("must not exceed 1, got {}", t.rate),
                ));
            }
            match (t.upper, tiers.get(i + 1)) {
                (Some(u), _) if u <= t.lower => {
                    out.push((format!("{path}.upper"), "must exceed lower".into()))
                }
                (Some(u), Some(next)) if next.lower != u => out.push((
                    format!("performance_tiers[{}].lower", i + 1),
                    format!("must equal the previous upper bound {u}"),
                )),
                (Some(_), None) => out.push((
                    format!("{path}.upper"),
                    "last tier must be unbounded".into(),
                )),
                (None, Some(_)) => out.push((
                    format!("{path}.upper"),
                    "only the last tier may be unbounded".into(),
                )),
                _ => {}
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().into_iter().next() {
            None => Ok(()),
            Some((field, reason)) => Err(TokenomicsError::Domain { field, reason }),
        }
    }

    /// Tier rate for the exact return `gain / base` (`gain >= 0`). A zero base selects the top tier.
    pub fn performance_rate(&self, gain: Money, base: Money) -> Rate {
        let tiers = &self.performance_tiers;
        // r < bound  <=>  gain * 1e9 < bound * base
        let below = |bound: Rate| {
            base.0 != 0
                && ethnum::U256::from(gain.0) * ethnum::U256::from(NANO)
                    < ethnum::U256::from(bound.nanos()) * ethnum::U256::from(base.0)
        };
        tiers
            .iter()
            .find(|t| t.upper.is_none_or(below))
            .or(tiers.last())
            .map_or(Rate::ZERO, |t| t.rate)
    }

    /// Tier rate for a decimal return; `None` for negative or non-finite `r`.
    pub fn performance_rate_for(&self, r: f64) -> Option<Rate> {
        if !(r >= 0.0) || !r.is_finite() {
            return None;
        }
        self.performance_tiers
            .iter()
            .find(|t| t.upper.is_none_or(|u| r < u.to_f64()))
            .map(|t| t.rate)
    }
}

/// Monthly accrual of an annual rate, carrying the division remainder between months.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManagementAccrual {
    carry: u128,
}

impl ManagementAccrual {
    pub fn monthly(&mut self, reserve: Money, annual: Rate) -> Result<Money> {
        let num = reserve
            .0
            .checked_mul(annual.nanos())
            .and_then(|n| n.checked_add(self.carry))
            .ok_or(TokenomicsError::Overflow("management fee"))?;
        let den = 12 * NANO;
        self.carry = num % den;
        Ok(Money(num / den))
    }
}
