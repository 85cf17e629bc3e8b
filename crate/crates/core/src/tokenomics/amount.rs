//! Integer fixed-point quantities.
//!
//! Money and tokens are counted in micro-units (6 decimals), prices and NAVs in
//! wad (18 decimals), fee rates in nano-units (9 decimals).

use std::fmt;
use std::ops::{Add, AddAssign, Sub};

use ethnum::U256;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::error::{Result, TokenomicsError};

pub const MICRO: u128 = 1_000_000;
pub const WAD: u128 = 1_000_000_000_000_000_000;
pub const NANO: u128 = 1_000_000_000;

/// `floor(a * b / c)` with a 256-bit intermediate.
pub fn mul_div(a: u128, b: u128, c: u128) -> Result<u128> {
    if c == 0 {
        return Err(TokenomicsError::domain("divisor", "division by zero"));
    }
    let q = U256::from(a) * U256::from(b) / U256::from(c);
    u128::try_from(q).map_err(|_| TokenomicsError::Overflow("mul_div"))
}

/// `ceil(a * b / c)` with a 256-bit intermediate.
pub fn mul_div_ceil(a: u128, b: u128, c: u128) -> Result<u128> {
    if c == 0 {
        return Err(TokenomicsError::domain("divisor", "division by zero"));
    }
    let (c256, p) = (U256::from(c), U256::from(a) * U256::from(b));
    let q = p / c256 + if p % c256 == 0 { U256::ZERO } else { U256::ONE };
    u128::try_from(q).map_err(|_| TokenomicsError::Overflow("mul_div_ceil"))
}

fn decimal_to_scaled(field: &str, value: f64, scale: u128) -> Result<u128> {
    if !value.is_finite() || value < 0.0 {
        return Err(TokenomicsError::domain(
            field,
            format!("must be finite and non-negative, got {value}"),
        ));
    }
    let scaled = (value * scale as f64).round();
    if scaled >= 2f64.powi(120) {
        return Err(TokenomicsError::domain(
            field,
            format!("{value} is too large"),
        ));
    }
    Ok(scaled as u128)
}

fn parse_scaled(text: &str, digits: usize) -> Option<u128> {
    let (int, frac) = text.split_once('.').unwrap_or((text, ""));
    if int.is_empty()
        || frac.len() > digits
        || !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit())
    {
        return None;
    }
    let scale = 10u128.checked_pow(digits as u32)?;
    let frac_value = if frac.is_empty() {
        0
    } else {
        frac.parse::<u128>().ok()? * 10u128.pow((digits - frac.len()) as u32)
    };
    int.parse::<u128>()
        .ok()?
        .checked_mul(scale)?
        .checked_add(frac_value)
}

/// Serde as an exact fixed-point decimal string.
macro_rules! string_serde {
    ($name:ident, $digits:expr) => {
        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                let text = String::deserialize(d)?;
                parse_scaled(&text, $digits).map($name).ok_or_else(|| {
                    serde::de::Error::custom(format!("invalid fixed-point amount `{text}`"))
                })
            }
        }
    };
}

/// Serializes a raw `u128` as a decimal string, which every JSON consumer can hold.
pub(crate) fn u128_str<S: Serializer>(v: &u128, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

fn fmt_scaled(f: &mut fmt::Formatter<'_>, v: u128, scale: u128, digits: usize) -> fmt::Result {
    write!(f, "{}.{:0digits$}", v / scale, v % scale)
}

macro_rules! micro_amount {
    ($(#[$m:meta])* $name:ident) => {
        $(#[$m])*
        #[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub u128);

        string_serde!($name, 6);

        impl $name {
            pub const ZERO: Self = Self(0);

            pub const fn from_micros(micros: u128) -> Self {
                Self(micros)
            }

            pub const fn whole(units: u128) -> Self {
                Self(units * MICRO)
            }

            pub const fn micros(self) -> u128 {
                self.0
            }

            /// Rounds a decimal amount to the nearest micro-unit.
            pub fn from_decimal(field: &str, value: f64) -> Result<Self> {
                decimal_to_scaled(field, value, MICRO).map(Self)
            }

            pub fn to_f64(self) -> f64 {
                self.0 as f64 / MICRO as f64
            }

            pub fn checked_sub(self, rhs: Self) -> Option<Self> {
                self.0.checked_sub(rhs.0).map(Self)
            }

            pub fn saturating_sub(self, rhs: Self) -> Self {
                Self(self.0.saturating_sub(rhs.0))
            }
        }

        impl Add for $name {
            type Output = Self;
            fn add(self, rhs: Self) -> Self {
                Self(self.0 + rhs.0)
            }
        }

        impl AddAssign for $name {
            fn add_assign(&mut self, rhs: Self) {
                self.0 += rhs.0;
            }
        }

        impl Sub for $name {
            type Output = Self;
            fn sub(self, rhs: Self) -> Self {
                Self(self.0 - rhs.0)
            }
        }

        impl std::iter::Sum for $name {
            fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
                Self(iter.map(|x| x.0).sum())
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                fmt_scaled(f, self.0, MICRO, 6)
            }
        }
    };
}

micro_amount!(
    /// Reference-currency amount in micro-units.
    Money
);
micro_amount!(
    /// Token amount in micro-tokens.
    Tokens
);

/// Price in wad: reference-currency units per token (or per fund unit).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Price(pub u128);

string_serde!(Price, 18);

impl Price {
    pub const ONE: Price = Price(WAD);

    pub fn from_decimal(field: &str, value: f64) -> Result<Self> {
        let p = decimal_to_scaled(field, value, WAD)?;
        if p == 0 {
            return Err(TokenomicsError::domain(field, "price must be positive"));
        }
        Ok(Price(p))
    }

    pub const fn wad(self) -> u128 {
        self.0
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / WAD as f64
    }

    /// Tokens bought by `amount` at this price, rounded down.
    pub fn tokens_for(self, amount: Money) -> Result<Tokens> {
        mul_div(amount.0, WAD, self.0).map(Tokens)
    }

    /// Value of `tokens` at this price, rounded down.
    pub fn value_of(self, tokens: Tokens) -> Result<Money> {
        mul_div(tokens.0, self.0, WAD).map(Money)
    }
}

impl fmt::Display for Price {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_scaled(f, self.0, WAD, 18)
    }
}

/// Non-negative rate in nano-units. Serialized as a decimal number.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rate(u128);

impl Rate {
    pub const ZERO: Rate = Rate(0);
    pub const ONE: Rate = Rate(NANO);

    pub const fn from_nanos(nanos: u128) -> Self {
        Rate(nanos)
    }

    /// Rounds to the nearest nano-unit.
    pub fn from_decimal(field: &str, value: f64) -> Result<Self> {
        decimal_to_scaled(field, value, NANO).map(Rate)
    }

    pub const fn nanos(self) -> u128 {
        self.0
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / NANO as f64
    }

    /// `floor(rate * amount)`.
    pub fn of(self, amount: u128) -> Result<u128> {
        mul_div(amount, self.0, NANO)
    }

    /// `ceil(rate * amount)`.
    pub fn of_ceil(self, amount: u128) -> Result<u128> {
        mul_div_ceil(amount, self.0, NANO)
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_scaled(f, self.0, NANO, 9)
    }
}

impl Serialize for Rate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.to_f64())
    }
}

impl<'de> Deserialize<'de> for Rate {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        Rate::from_decimal("rate", v).map_err(serde::de::Error::custom)
    }
}
