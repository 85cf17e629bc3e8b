//! Collateral vault: a fiat account plus two fund compartments valued at NAV.

use serde::{Deserialize, Serialize};

use super::amount::{mul_div, mul_div_ceil, Money, Price, Rate, WAD};
use super::error::{Result, TokenomicsError};

/// Holding in one fund compartment. `units` are micro-units, `nav` is money per unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FundLeg {
    pub units: u128,
    pub nav: Price,
}

impl FundLeg {
    fn new() -> Self {
        FundLeg {
            units: 0,
            nav: Price::ONE,
        }
    }

    pub fn value(&self) -> Result<Money> {
        mul_div(self.units, self.nav.wad(), WAD).map(Money)
    }

    /// Units purchasable with at most `amount`.
    fn units_for(&self, amount: Money) -> Result<u128> {
        mul_div(amount.0, WAD, self.nav.wad())
    }
}

/// Vault balances. `recorded` follows every external flow and revaluation; it must
/// always equal the recomputed [`VaultState::pledged_value`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VaultState {
    pub fiat: Money,
    /// Traditional-asset compartment (A-RAIF).
    pub a: FundLeg,
    /// Crypto-asset compartment (C-RAIF).
    pub c: FundLeg,
    recorded: Money,
}

impl Default for VaultState {
    fn default() -> Self {
        VaultState {
            fiat: Money::ZERO,
            a: FundLeg::new(),
            c: FundLeg::new(),
            recorded: Money::ZERO,
        }
    }
}

/// Minimum share of invested reserves held in the traditional compartment.
pub const MIN_CEFI_FRACTION: Rate = Rate::from_nanos(500_000_000);

fn daily_factor(field: &str, r: f64) -> Result<u128> {
    if !r.is_finite() || r <= -1.0 {
        return Err(TokenomicsError::domain(
            field,
            format!("return must be finite and above -1, got {r}"),
        ));
    }
    let f = ((1.0 + r) * WAD as f64).round();
    if !(f >= 1.0) || f >= 2f64.powi(100) {
        return Err(TokenomicsError::domain(
            field,
            format!("return {r} is out of range"),
        ));
    }
    Ok(f as u128)
}

impl VaultState {
    pub fn new() -> Self {
        Self::default()
    }

    /// `fiat + units_a * nav_a + units_c * nav_c`, recomputed from balances.
    pub fn pledged_value(&self) -> Result<Money> {
        Ok(self.fiat + self.a.value()? + self.c.value()?)
    }

    pub fn recorded_value(&self) -> Money {
        self.recorded
    }

    pub fn check_identity(&self) -> Result<()> {
        let recomputed = self.pledged_value()?;
        if recomputed != self.recorded {
            return Err(TokenomicsError::Invariant(format!(
                "vault identity: recorded {} but legs sum to {recomputed}",
                self.recorded
            )));
        }
        Ok(())
    }

    /// Value of the traditional compartment over both compartments; `None` when nothing is invested.
    pub fn cefi_share(&self) -> Result<Option<f64>> {
        let (a, c) = (self.a.value()?, self.c.value()?);
        let invested = a.0 + c.0;
        Ok((invested > 0).then(|| a.0 as f64 / invested as f64))
    }

    pub fn deposit(&mut self, amount: Money) {
        self.fiat += amount;
        self.recorded += amount;
    }

    pub fn withdraw(&mut self, amount: Money) -> Result<()> {
        let fiat = self.fiat.checked_sub(amount).ok_or_else(|| {
            TokenomicsError::Policy(format!(
                "withdrawal of {amount} exceeds fiat balance {}",
                self.fiat
            ))
        })?;
        self.fiat = fiat;
        self.recorded = self.recorded - amount;
        Ok(())
    }

    /// Moves the whole reserve into the two compartments so that the traditional one holds
    /// `target_cefi_fraction` of it and the crypto one never exceeds the traditional one.
    /// Rounding residue stays in fiat; the pledged value is unchanged.
    pub fn allocate_reserves(&mut self, target_cefi_fraction: Rate) -> Result<()> {
        if target_cefi_fraction < MIN_CEFI_FRACTION || target_cefi_fraction > Rate::ONE {
            return Err(TokenomicsError::Policy(format!(
                "target traditional fraction {target_cefi_fraction} outside [0.5, 1]"
            )));
        }
        let total = self.pledged_value()?;
        let target_a = Money(target_cefi_fraction.of(total.0)?);
        let mut a = self.a;
        a.units = a.units_for(target_a)?;
        let value_a = a.value()?;
        let mut c = self.c;
        c.units = c.units_for((total - target_a).min(value_a))?;
        let value_c = c.value()?;
        let fiat = total
            .checked_sub(value_a + value_c)
            .ok_or(TokenomicsError::Invariant(
                "allocation exceeds reserve".into(),
            ))?;
        self.a = a;
        self.c = c;
        self.fiat = fiat;
        Ok(())
    }

    /// Multiplies each NAV by `1 + return`. Units are unchanged.
    pub fn advance_nav(&mut self, a_return: f64, c_return: f64) -> Result<()> {
        let (fa, fc) = (
            daily_factor("a_return", a_return)?,
            daily_factor("c_return", c_return)?,
        );
        let mut a = self.a;
        let mut c = self.c;
        a.nav = Price(mul_div(a.nav.wad(), fa, WAD)?);
        c.nav = Price(mul_div(c.nav.wad(), fc, WAD)?);
        if a.nav.wad() == 0 || c.nav.wad() == 0 {
            return Err(TokenomicsError::domain("nav", "NAV rounded to zero"));
        }
        let before = self.a.value()? + self.c.value()?;
        let after = a.value()? + c.value()?;
        self.a = a;
        self.c = c;
        self.recorded = self.recorded + after - before;
        Ok(())
    }

    /// Sells crypto units, then traditional units, until fiat covers `needed` or both are empty.
    /// Returns the fiat raised. The pledged value is unchanged.
    pub fn raise_fiat(&mut self, needed: Money) -> Result<Money> {
        let mut raised = Money::ZERO;
        for leg in [&mut self.c, &mut self.a] {
            let short = needed.saturating_sub(self.fiat);
            if short == Money::ZERO {
                break;
            }
            let before = leg.value()?;
            let sell = mul_div_ceil(short.0, WAD, leg.nav.wad())?.min(leg.units);
            leg.units -= sell;
            let proceeds = before - leg.value()?;
            self.fiat += proceeds;
            raised += proceeds;
        }
        Ok(raised)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rate(x: f64) -> Rate {
        Rate::from_decimal("r", x).unwrap()
    }

    #[test]
    fn identity_nav_split() {
        let mut v = VaultState::new();
        v.deposit(Money::whole(1000));
        v.allocate_reserves(rate(0.5)).unwrap();
        assert_eq!(v.a.units, 500 * 1_000_000);
        assert_eq!(v.c.units, 500 * 1_000_000);
        assert_eq!(v.fiat, Money::ZERO);
        assert_eq!(v.pledged_value().unwrap(), Money::whole(1000));
        v.check_identity().unwrap();
    }

    #[test]
    fn below_half_is_a_policy_error() {
        let mut v = VaultState::new();
        v.deposit(Money::whole(1000));
        let before = v.clone();
        assert!(matches!(
            v.allocate_reserves(rate(0.4)),
            Err(TokenomicsError::Policy(_))
        ));
        assert_eq!(v, before);
    }

    #[test]
    fn ten_percent_on_the_a_leg() {
        let mut v = VaultState::new();
        v.deposit(Money::whole(1000));
        v.allocate_reserves(rate(0.5)).unwrap();
        v.advance_nav(0.10, 0.0).unwrap();
        assert_eq!(v.a.value().unwrap(), Money::whole(550));
        v.check_identity().unwrap();
        v.advance_nav(0.0, 0.0).unwrap();
        assert_eq!(v.a.value().unwrap(), Money::whole(550));
    }

    #[test]
    fn returns_at_or_below_minus_one_are_rejected() {
        let mut v = VaultState::new();
        assert!(v.advance_nav(-1.0, 0.0).is_err());
        assert!(v.advance_nav(0.0, f64::NAN).is_err());
    }

    #[test]
    fn raising_fiat_sells_crypto_first() {
        let mut v = VaultState::new();
        v.deposit(Money::whole(1000));
        v.allocate_reserves(rate(0.5)).unwrap();
        v.advance_nav(0.03, 0.07).unwrap();
        v.raise_fiat(Money::whole(100)).unwrap();
        assert!(v.fiat >= Money::whole(100));
        assert_eq!(v.a.units, 500 * 1_000_000);
        v.check_identity().unwrap();
        v.withdraw(Money::whole(100)).unwrap();
        v.check_identity().unwrap();
    }

    #[test]
    fn crypto_never_exceeds_traditional_after_allocation() {
        let mut v = VaultState::new();
        v.deposit(Money(999_999_999));
        v.advance_nav(0.37, 2.9).unwrap();
        v.allocate_reserves(rate(0.5)).unwrap();
        assert!(v.c.value().unwrap() <= v.a.value().unwrap());
        v.check_identity().unwrap();
    }
}
