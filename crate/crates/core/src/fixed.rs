//! Fixed-point quantities shared by the charge oracle and the trackers.
//!
//! A [`Charge`] is stored on an integer grid of `1 / (2^7 * 10^4)` units,
//! where one unit is the leakage of a single activation. The `2^7` factor
//! covers tick-resolved open times (one tRC is 128 ticks in the default
//! profile) and the `10^4` factor covers leakage rates with four decimal
//! places, so the linear charge model evaluates exactly on the default
//! profile. Tracker weights live on the coarser `1/2^7` grid, which is a
//! sub-lattice of this one.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Sub};

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// Fractional bits of tracker counters and EACT weights.
pub const FRAC_BITS: u32 = 7;

/// Resolution of a leakage rate: rates are multiples of `1 / ALPHA_DENOM`.
pub const ALPHA_DENOM: u64 = 10_000;

/// Raw units per whole activation.
pub const CHARGE_SCALE: u64 = (1 << FRAC_BITS) * ALPHA_DENOM;

/// Raw units per step of the 7-bit tracker grid.
const FIXED7_STEP: u64 = ALPHA_DENOM;

/// Relative charge, in units of one activation's leakage.
#[derive(Copy, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Charge(u64);

impl Charge {
    pub const ZERO: Charge = Charge(0);
    pub const ONE: Charge = Charge(CHARGE_SCALE);

    pub const fn from_raw(raw: u64) -> Self {
        Charge(raw)
    }

    pub const fn raw(self) -> u64 {
        self.0
    }

    pub const fn from_int(n: u64) -> Self {
        Charge(n * CHARGE_SCALE)
    }

    /// Builds a charge from a value with 7 fractional bits (`raw7 / 128`).
    pub const fn from_fixed7(raw7: u64) -> Self {
        Charge(raw7 * FIXED7_STEP)
    }

    /// Smallest value on the charge grid that is `>= num / den`.
    pub fn from_ratio_ceil(num: u64, den: u64) -> Self {
        assert!(den > 0, "zero denominator");
        let scaled = num as u128 * CHARGE_SCALE as u128;
        Charge(scaled.div_ceil(den as u128) as u64)
    }

    /// Nearest grid value to `x`; `None` for negative or non-finite input.
    pub fn from_f64(x: f64) -> Option<Self> {
        if !x.is_finite() || x < 0.0 {
            return None;
        }
        Some(Charge((x * CHARGE_SCALE as f64).round() as u64))
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / CHARGE_SCALE as f64
    }

    /// Value rounded up onto the 7-bit tracker grid, returned as `raw7`.
    pub fn ceil_fixed7(self) -> u64 {
        self.0.div_ceil(FIXED7_STEP)
    }

    /// Drops all fractional bits beyond the first `bits`.
    pub fn truncate_frac_bits(self, bits: u32) -> Self {
        assert!(bits <= FRAC_BITS, "at most {FRAC_BITS} fractional bits");
        let step = CHARGE_SCALE >> bits;
        Charge(self.0 - self.0 % step)
    }

    /// True when the value lies on the `bits`-fractional-bit grid.
    pub fn is_on_grid(self, bits: u32) -> bool {
        self.0.is_multiple_of(CHARGE_SCALE >> bits)
    }

    pub fn saturating_sub(self, rhs: Charge) -> Charge {
        Charge(self.0.saturating_sub(rhs.0))
    }

    pub fn max(self, rhs: Charge) -> Charge {
        Charge(self.0.max(rhs.0))
    }

    pub fn min(self, rhs: Charge) -> Charge {
        Charge(self.0.min(rhs.0))
    }
}

impl Add for Charge {
    type Output = Charge;
    fn add(self, rhs: Charge) -> Charge {
        Charge(self.0 + rhs.0)
    }
}

impl AddAssign for Charge {
    fn add_assign(&mut self, rhs: Charge) {
        self.0 += rhs.0;
    }
}

impl Sub for Charge {
    type Output = Charge;
    fn sub(self, rhs: Charge) -> Charge {
        Charge(self.0 - rhs.0)
    }
}

impl Sum for Charge {
    fn sum<I: Iterator<Item = Charge>>(iter: I) -> Charge {
        iter.fold(Charge::ZERO, Add::add)
    }
}

impl fmt::Debug for Charge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Charge({})", self)
    }
}

impl fmt::Display for Charge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let whole = self.0 / CHARGE_SCALE;
        let frac = self.0 % CHARGE_SCALE;
        if frac == 0 {
            return write!(f, "{whole}");
        }
        // CHARGE_SCALE = 2^7 * 10^4 divides 10^11, so 11 digits are exact.
        let digits = frac as u128 * 100_000_000_000 / CHARGE_SCALE as u128;
        let s = format!("{digits:011}");
        write!(f, "{whole}.{}", s.trim_end_matches('0'))
    }
}

/// Leakage rate per tRC of extra open time, normalized to one activation.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Alpha(u32);

impl Alpha {
    pub const ZERO: Alpha = Alpha(0);
    pub const ONE: Alpha = Alpha(ALPHA_DENOM as u32);

    /// `parts / 10_000`.
    pub fn from_parts(parts: u32) -> Result<Self, ConfigError> {
        if parts as u64 > ALPHA_DENOM {
            return Err(ConfigError::invalid("alpha", "must lie in [0, 1]"));
        }
        Ok(Alpha(parts))
    }

    pub fn from_f64(x: f64) -> Result<Self, ConfigError> {
        if !x.is_finite() || !(0.0..=1.0).contains(&x) {
            return Err(ConfigError::invalid("alpha", "must lie in [0, 1]"));
        }
        let scaled = x * ALPHA_DENOM as f64;
        let parts = scaled.round();
        if (scaled - parts).abs() > 1e-6 {
            return Err(ConfigError::invalid("alpha", "at most four decimal places are supported"));
        }
        Ok(Alpha(parts as u32))
    }

    pub const fn parts(self) -> u32 {
        self.0
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / ALPHA_DENOM as f64
    }

    /// `1 + alpha` as a charge.
    pub fn one_plus(self) -> Charge {
        Charge::ONE + Charge::from_raw(self.0 as u64 * (1 << FRAC_BITS))
    }
}

impl Serialize for Alpha {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(self.to_f64())
    }
}

impl<'de> Deserialize<'de> for Alpha {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let x = f64::deserialize(d)?;
        Alpha::from_f64(x).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed7_grid_embeds() {
        assert_eq!(Charge::from_fixed7(128), Charge::ONE);
        assert_eq!(Charge::from_fixed7(192).to_f64(), 1.5);
        assert!(Charge::from_fixed7(193).is_on_grid(7));
        assert!(!Charge::from_fixed7(193).is_on_grid(6));
    }

    #[test]
    fn truncation_drops_low_bits() {
        let x = Charge::from_fixed7(128 + 127);
        assert_eq!(x.truncate_frac_bits(0), Charge::ONE);
        assert_eq!(x.truncate_frac_bits(1), Charge::from_fixed7(192));
        assert_eq!(x.truncate_frac_bits(7), x);
    }

    #[test]
    fn alpha_parsing() {
        assert_eq!(Alpha::from_f64(0.35).unwrap().parts(), 3500);
        assert_eq!(Alpha::from_f64(0.48).unwrap().parts(), 4800);
        assert!(Alpha::from_f64(1.2).is_err());
        assert!(Alpha::from_f64(0.123456).is_err());
        assert_eq!(Alpha::from_f64(0.35).unwrap().one_plus(), Charge::from_ratio_ceil(135, 100));
    }

    #[test]
    fn display_is_exact_decimal() {
        assert_eq!(Charge::from_ratio_ceil(135, 100).to_string(), "1.35");
        assert_eq!(Charge::from_int(4000).to_string(), "4000");
        assert_eq!(Charge::from_fixed7(1).to_string(), "0.0078125");
    }

    #[test]
    fn ratio_ceil_rounds_up() {
        let third = Charge::from_ratio_ceil(1, 3);
        assert!(third.to_f64() >= 1.0 / 3.0);
        assert_eq!(Charge::from_ratio_ceil(4000, 1), Charge::from_int(4000));
    }
}
