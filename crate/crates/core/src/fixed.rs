//! Fixed-point coordinates on the circle ℝ/ℤ.
//!
//! Every downstream computation (arcs, discrepancy, block measures) runs on
//! [`Fixed`] values: unsigned integers scaled by 2^96. Points of the circle
//! live in `[0, ONE)`; lengths and sums of lengths may exceed one. Addition,
//! subtraction and comparison are exact, so measures of arc unions built from
//! dyadic data are exact as well.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Number of fractional bits carried by [`Fixed`].
pub const FRAC_BITS: u32 = 96;

const ONE_RAW: u128 = 1u128 << FRAC_BITS;
const MASK: u128 = ONE_RAW - 1;

/// A non-negative dyadic rational `raw / 2^96`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Fixed(u128);

impl Fixed {
    pub const ZERO: Fixed = Fixed(0);
    pub const ONE: Fixed = Fixed(ONE_RAW);
    pub const HALF: Fixed = Fixed(ONE_RAW >> 1);

    pub const fn from_raw(raw: u128) -> Self {
        Fixed(raw)
    }

    pub const fn raw(self) -> u128 {
        self.0
    }

    /// `2^{-k}` for `k ≤ 96`.
    pub fn pow2_neg(k: u32) -> Self {
        assert!(k <= FRAC_BITS, "scale 2^-{k} below fixed-point resolution");
        Fixed(ONE_RAW >> k)
    }

    /// Nearest representable value to a non-negative finite `x`.
    pub fn from_f64(x: f64) -> Result<Self> {
        if !x.is_finite() || x < 0.0 {
            return Err(Error::param("value", format!("{x} is not a finite non-negative real")));
        }
        if x >= (1u64 << 31) as f64 {
            return Err(Error::param("value", format!("{x} exceeds the fixed-point range")));
        }
        // Split so that both halves convert exactly.
        let int = x.trunc();
        let frac = x - int;
        let scaled = (frac * 2f64.powi(FRAC_BITS as i32)).round();
        let raw = ((int as u128) << FRAC_BITS) + scaled as u128;
        Ok(Fixed(raw))
    }

    /// Nearest point of `[0, 1)` to `x mod 1`.
    pub fn from_unit_f64(x: f64) -> Result<Self> {
        if !x.is_finite() {
            return Err(Error::param("value", format!("{x} is not finite")));
        }
        let f = x - x.floor();
        Ok(Fixed::from_f64(f)?.wrap())
    }

    pub fn to_f64(self) -> f64 {
        let hi = (self.0 >> 64) as u64 as f64 * 2f64.powi(64);
        let lo = self.0 as u64 as f64;
        (hi + lo) * 2f64.powi(-(FRAC_BITS as i32))
    }

    /// Reduction modulo one.
    pub fn wrap(self) -> Self {
        Fixed(self.0 & MASK)
    }

    pub fn is_unit(self) -> bool {
        self.0 < ONE_RAW
    }

    /// `(self + other) mod 1`.
    pub fn add_mod1(self, other: Fixed) -> Fixed {
        Fixed(self.0.wrapping_add(other.0) & MASK)
    }

    /// `(self - other) mod 1`.
    pub fn sub_mod1(self, other: Fixed) -> Fixed {
        Fixed(self.0.wrapping_sub(other.0) & MASK)
    }

    /// Distance `‖self − other‖` on the circle, for points of `[0, 1)`.
    pub fn circle_dist(self, other: Fixed) -> Fixed {
        let d = self.sub_mod1(other).0;
        Fixed(d.min(ONE_RAW - d))
    }

    pub fn checked_add(self, other: Fixed) -> Option<Fixed> {
        self.0.checked_add(other.0).map(Fixed)
    }

    pub fn saturating_sub(self, other: Fixed) -> Fixed {
        Fixed(self.0.saturating_sub(other.0))
    }

    /// `floor(self / 2^{-k})`, the index of the dyadic grid cell holding `self`.
    pub fn cell(self, k: u32) -> u128 {
        self.0 >> (FRAC_BITS - k)
    }

    /// Exact decimal expansion (at most 96 fractional digits).
    pub fn to_decimal_string(self) -> String {
        let int = self.0 >> FRAC_BITS;
        let frac = self.0 & MASK;
        if frac == 0 {
            return int.to_string();
        }
        // frac / 2^96 = frac * 5^96 / 10^96
        let digits = (BigUint::from(frac) * BigUint::from(5u32).pow(FRAC_BITS)).to_string();
        let padded = format!("{:0>width$}", digits, width = FRAC_BITS as usize);
        let trimmed = padded.trim_end_matches('0');
        format!("{int}.{trimmed}")
    }

    /// Parses a plain decimal string, rounding to the nearest representable
    /// value. Decimal strings produced by [`Fixed::to_decimal_string`] are
    /// recovered exactly.
    pub fn parse_decimal(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::param("value", format!("`{s}` is not a non-negative decimal"));
        let (int_part, frac_part) = match s.split_once('.') {
            Some((i, f)) => (i, f),
            None => (s, ""),
        };
        if (int_part.is_empty() && frac_part.is_empty())
            || !int_part.chars().all(|c| c.is_ascii_digit())
            || !frac_part.chars().all(|c| c.is_ascii_digit())
        {
            // Fall back to scientific notation via f64.
            let x: f64 = s.parse().map_err(|_| bad())?;
            return Fixed::from_f64(x);
        }
        let int: u128 = if int_part.is_empty() {
            0
        } else {
            int_part.parse().map_err(|_| bad())?
        };
        if int >= 1 << 31 {
            return Err(bad());
        }
        let mut raw = int << FRAC_BITS;
        if !frac_part.is_empty() {
            let num: BigUint = frac_part.parse().map_err(|_| bad())?;
            let den = BigUint::from(10u32).pow(frac_part.len() as u32);
            let scaled = (num << FRAC_BITS) + (&den >> 1u32);
            let q = scaled / den;
            raw += q.to_u128().ok_or_else(bad)?;
        }
        Ok(Fixed(raw))
    }

    pub(crate) fn to_biguint(self) -> BigUint {
        BigUint::from(self.0)
    }

    pub(crate) fn from_biguint(v: &BigUint) -> Option<Fixed> {
        if v.is_zero() {
            return Some(Fixed::ZERO);
        }
        v.to_u128().map(Fixed)
    }
}

impl fmt::Debug for Fixed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fixed({})", self.to_f64())
    }
}

impl fmt::Display for Fixed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}

impl std::ops::Add for Fixed {
    type Output = Fixed;
    fn add(self, rhs: Fixed) -> Fixed {
        Fixed(self.0 + rhs.0)
    }
}

impl std::ops::Sub for Fixed {
    type Output = Fixed;
    fn sub(self, rhs: Fixed) -> Fixed {
        Fixed(self.0 - rhs.0)
    }
}

impl Serialize for Fixed {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_decimal_string())
    }
}

impl<'de> Deserialize<'de> for Fixed {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Fixed::parse_decimal(&s).map_err(serde::de::Error::custom)
    }
}

/// Radius `n^{-α}` rounded to the fixed-point grid, but never below one
/// unit so that a ball always contains its own center.
pub fn power_radius(n: u64, alpha: f64) -> Fixed {
    let r = (n as f64).powf(-alpha);
    // n ≥ 1 and α > 0 keep r in (0, 1]; from_f64 cannot fail.
    let r = Fixed::from_f64(r).expect("radius in range");
    r.max(Fixed::from_raw(1))
}
