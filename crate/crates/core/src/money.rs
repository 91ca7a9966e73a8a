//! Tick-denominated money. One tick is 0.1 currency units; every price and
//! cost in the engine is an exact, non-negative number of ticks.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul};
use std::str::FromStr;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

/// Ticks per currency unit.
pub const TICKS_PER_UNIT: u64 = 10;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Money(u64);

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MoneyError {
    #[error("money must be non-negative, got {0}")]
    Negative(String),
    #[error("`{0}` is not a multiple of 0.1")]
    OffTick(String),
    #[error("`{0}` is not a decimal amount")]
    Malformed(String),
    #[error("`{0}` overflows the tick range")]
    Overflow(String),
}

impl Money {
    pub const ZERO: Money = Money(0);

    pub const fn from_ticks(ticks: u64) -> Self {
        Money(ticks)
    }

    /// Whole currency units.
    pub const fn from_units(units: u64) -> Self {
        Money(units * TICKS_PER_UNIT)
    }

    pub const fn ticks(self) -> u64 {
        self.0
    }

    pub fn checked_sub(self, rhs: Money) -> Option<Money> {
        self.0.checked_sub(rhs.0).map(Money)
    }

    pub fn saturating_sub(self, rhs: Money) -> Money {
        Money(self.0.saturating_sub(rhs.0))
    }

    /// Signed difference in ticks.
    pub fn diff(self, rhs: Money) -> i64 {
        self.0 as i64 - rhs.0 as i64
    }

    /// Converts a float amount in currency units, rejecting anything that is
    /// not within 1e-6 of a tick.
    pub fn from_units_f64(units: f64) -> Result<Self, MoneyError> {
        if units.is_nan() {
            return Err(MoneyError::Malformed(units.to_string()));
        }
        if units < 0.0 {
            return Err(MoneyError::Negative(units.to_string()));
        }
        let scaled = units * TICKS_PER_UNIT as f64;
        if scaled > u64::MAX as f64 / 2.0 {
            return Err(MoneyError::Overflow(units.to_string()));
        }
        let rounded = scaled.round();
        if (scaled - rounded).abs() > 1e-6 {
            return Err(MoneyError::OffTick(units.to_string()));
        }
        Ok(Money(rounded as u64))
    }
}

impl fmt::Display for Money {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.0 / TICKS_PER_UNIT, self.0 % TICKS_PER_UNIT)
    }
}

impl FromStr for Money {
    type Err = MoneyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.starts_with('-') {
            return Err(MoneyError::Negative(s.to_string()));
        }
        let (whole, frac) = match s.split_once('.') {
            Some((w, f)) => (w, f),
            None => (s, ""),
        };
        if whole.is_empty() && frac.is_empty() {
            return Err(MoneyError::Malformed(s.to_string()));
        }
        if !whole.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(MoneyError::Malformed(s.to_string()));
        }
        let frac = frac.trim_end_matches('0');
        if frac.len() > 1 {
            return Err(MoneyError::OffTick(s.to_string()));
        }
        let whole: u64 =
            if whole.is_empty() { 0 } else { whole.parse().map_err(|_| MoneyError::Overflow(s.to_string()))? };
        let tenth: u64 = if frac.is_empty() { 0 } else { frac.parse().expect("single digit") };
        whole
            .checked_mul(TICKS_PER_UNIT)
            .and_then(|w| w.checked_add(tenth))
            .map(Money)
            .ok_or_else(|| MoneyError::Overflow(s.to_string()))
    }
}

impl Add for Money {
    type Output = Money;
    fn add(self, rhs: Money) -> Money {
        Money(self.0 + rhs.0)
    }
}

impl AddAssign for Money {
    fn add_assign(&mut self, rhs: Money) {
        self.0 += rhs.0;
    }
}

impl Mul<u64> for Money {
    type Output = Money;
    fn mul(self, rhs: u64) -> Money {
        Money(self.0 * rhs)
    }
}

impl Sum for Money {
    fn sum<I: Iterator<Item = Money>>(iter: I) -> Money {
        iter.fold(Money::ZERO, Add::add)
    }
}

impl Serialize for Money {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

// Accepts `12`, `1.5` or `"1.5"`, all in currency units.
impl<'de> Deserialize<'de> for Money {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct MoneyVisitor;

        impl Visitor<'_> for MoneyVisitor {
            type Value = Money;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a non-negative amount with at most one decimal digit")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Money, E> {
                v.checked_mul(TICKS_PER_UNIT).map(Money).ok_or_else(|| E::custom(MoneyError::Overflow(v.to_string())))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Money, E> {
                if v < 0 {
                    return Err(E::custom(MoneyError::Negative(v.to_string())));
                }
                self.visit_u64(v as u64)
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Money, E> {
                Money::from_units_f64(v).map_err(E::custom)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Money, E> {
                v.parse().map_err(E::custom)
            }
        }

        deserializer.deserialize_any(MoneyVisitor)
    }
}
