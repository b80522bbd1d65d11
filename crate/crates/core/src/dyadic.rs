//! Exact dyadic points of `[0, 1)`.

use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixed::{Fixed, FRAC_BITS};

/// The value `mantissa / 2^bits`, always in `[0, 1)`.
///
/// Multiplying by an integer and reducing modulo one is exact, which is what
/// makes `{q_n y}` computable without rounding for `q_n` with thousands of
/// bits.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "DyadicRepr", into = "DyadicRepr")]
pub struct DyadicNumber {
    mantissa: BigUint,
    bits: u64,
}

impl DyadicNumber {
    pub fn new(mantissa: BigUint, bits: u64) -> Result<Self> {
        if bits == 0 {
            return Err(Error::param("bits", "precision must be positive"));
        }
        if mantissa.bits() > bits {
            return Err(Error::param("mantissa", format!("mantissa does not fit in {bits} bits")));
        }
        Ok(DyadicNumber { mantissa, bits })
    }

    pub fn zero(bits: u64) -> Self {
        DyadicNumber {
            mantissa: BigUint::zero(),
            bits: bits.max(1),
        }
    }

    /// `floor(2^bits · {num/den}) / 2^bits`.
    pub fn from_ratio(num: &BigUint, den: &BigUint, bits: u64) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::param("den", "zero denominator"));
        }
        let frac = num.mod_floor(den);
        let mantissa = (frac << bits) / den;
        DyadicNumber::new(mantissa, bits)
    }

    /// Parses `0.xyz` (decimal, truncated to `bits`), `p/q` (truncated) or
    /// `m/2^B` style input given as `"m*2^-B"`.
    pub fn parse(s: &str, bits: u64) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::param("value", format!("cannot parse `{s}` as a point of [0,1)"));
        if let Some((m, e)) = s.split_once("*2^-") {
            let m: BigUint = m.trim().parse().map_err(|_| bad())?;
            let e: u64 = e.trim().parse().map_err(|_| bad())?;
            let d = DyadicNumber::new(m, e)?;
            return Ok(d.with_bits(bits.max(e)));
        }
        if let Some((p, q)) = s.split_once('/') {
            let p: BigUint = p.trim().parse().map_err(|_| bad())?;
            let q: BigUint = q.trim().parse().map_err(|_| bad())?;
            return DyadicNumber::from_ratio(&p, &q, bits);
        }
        let (int_part, frac_part) = s.split_once('.').unwrap_or((s, ""));
        if !int_part.chars().all(|c| c.is_ascii_digit())
            || !frac_part.chars().all(|c| c.is_ascii_digit())
            || (int_part.is_empty() && frac_part.is_empty())
        {
            return Err(bad());
        }
        let digits = format!("{int_part}{frac_part}");
        let num: BigUint = digits.parse().map_err(|_| bad())?;
        let den = BigUint::from(10u32).pow(frac_part.len() as u32);
        DyadicNumber::from_ratio(&num, &den, bits)
    }

    pub fn from_fixed(x: Fixed, bits: u64) -> Self {
        let m = x.wrap().to_biguint();
        let mantissa = if bits >= FRAC_BITS as u64 {
            m << (bits - FRAC_BITS as u64)
        } else {
            m >> (FRAC_BITS as u64 - bits)
        };
        DyadicNumber { mantissa, bits }
    }

    pub fn mantissa(&self) -> &BigUint {
        &self.mantissa
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    /// Same value at a different precision (truncating when reducing).
    pub fn with_bits(&self, bits: u64) -> Self {
        let mantissa = if bits >= self.bits {
            &self.mantissa << (bits - self.bits)
        } else {
            &self.mantissa >> (self.bits - bits)
        };
        DyadicNumber { mantissa, bits }
    }

    /// `{q · self}`, computed exactly.
    pub fn mul_frac(&self, q: &BigUint) -> Self {
        if q.is_zero() {
            return DyadicNumber::zero(self.bits);
        }
        let shift = q.trailing_zeros().unwrap_or(0);
        if q.bits() == shift + 1 {
            // q = 2^shift: a shift, no multiplication needed.
            let mantissa = if shift >= self.bits {
                BigUint::zero()
            } else {
                low_bits(&self.mantissa << shift, self.bits)
            };
            return DyadicNumber {
                mantissa,
                bits: self.bits,
            };
        }
        let prod = q * &self.mantissa;
        DyadicNumber {
            mantissa: low_bits(prod, self.bits),
            bits: self.bits,
        }
    }

    /// Truncation to the fixed-point grid.
    pub fn to_fixed(&self) -> Fixed {
        let m = if self.bits >= FRAC_BITS as u64 {
            &self.mantissa >> (self.bits - FRAC_BITS as u64)
        } else {
            &self.mantissa << (FRAC_BITS as u64 - self.bits)
        };
        Fixed::from_biguint(&m).expect("value below one")
    }

    pub fn to_f64(&self) -> f64 {
        self.to_fixed().to_f64()
    }

    /// Exact `‖self − other‖` scaled by `2^bits` (common precision is the larger one).
    pub fn circle_dist_scaled(&self, other: &DyadicNumber) -> (BigUint, u64) {
        let bits = self.bits.max(other.bits);
        let a = self.with_bits(bits).mantissa;
        let b = other.with_bits(bits).mantissa;
        let one = BigUint::one() << bits;
        let d = if a >= b { a - b } else { &one - (b - a) };
        let alt = &one - &d;
        (d.min(alt), bits)
    }
}

/// `x mod 2^bits`.
pub(crate) fn low_bits(x: BigUint, bits: u64) -> BigUint {
    if x.bits() <= bits {
        return x;
    }
    let words = bits.div_ceil(32) as usize;
    let mut digits = x.to_u32_digits();
    digits.truncate(words);
    let rem = bits % 32;
    if rem != 0 {
        if let Some(last) = digits.last_mut() {
            *last &= (1u32 << rem) - 1;
        }
    }
    BigUint::new(digits)
}

impl fmt::Debug for DyadicNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*2^-{}", self.mantissa, self.bits)
    }
}

impl fmt::Display for DyadicNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}

#[derive(Serialize, Deserialize)]
struct DyadicRepr {
    mantissa: String,
    bits: u64,
}

impl From<DyadicNumber> for DyadicRepr {
    fn from(d: DyadicNumber) -> Self {
        DyadicRepr {
            mantissa: d.mantissa.to_string(),
            bits: d.bits,
        }
    }
}

impl TryFrom<DyadicRepr> for DyadicNumber {
    type Error = Error;
    fn try_from(r: DyadicRepr) -> Result<Self> {
        let m: BigUint = r
            .mantissa
            .parse()
            .map_err(|_| Error::param("mantissa", "not a decimal integer"))?;
        DyadicNumber::new(m, r.bits)
    }
}

/// Lossy view used for reporting only.
pub(crate) fn scaled_to_f64(x: &BigUint, bits: u64) -> f64 {
    let shift = x.bits().saturating_sub(64);
    let top = (x >> shift).to_u64().unwrap_or(u64::MAX) as f64;
    top * 2f64.powi(shift as i32 - bits as i32)
}
