//! Continued fractions and the inhomogeneous Littlewood scan
//! `q‖qx‖‖qy − γ‖`.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::dyadic::{scaled_to_f64, DyadicNumber};
use crate::error::{Error, Result};

/// `[0; a_1, a_2, …, a_K]` with its convergents `p_k/q_k`, `k = 0..=K`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ContinuedFraction {
    pub partial_quotients: Vec<u64>,
    /// `(p_k, q_k)` starting from `(0, 1)` for `k = 0`.
    pub convergents: Vec<(BigUint, BigUint)>,
}

impl ContinuedFraction {
    pub fn new(partial_quotients: Vec<u64>) -> Result<Self> {
        if partial_quotients.is_empty() {
            return Err(Error::param("partial_quotients", "need at least one partial quotient"));
        }
        if partial_quotients.contains(&0) {
            return Err(Error::param("partial_quotients", "partial quotients must be positive"));
        }
        let mut convergents = Vec::with_capacity(partial_quotients.len() + 1);
        // (p_{-1}, q_{-1}) = (1, 0), (p_0, q_0) = (0, 1)
        let (mut p_prev, mut q_prev) = (BigUint::one(), BigUint::zero());
        let (mut p, mut q) = (BigUint::zero(), BigUint::one());
        convergents.push((p.clone(), q.clone()));
        for &a in &partial_quotients {
            let p_next = &p * a + &p_prev;
            let q_next = &q * a + &q_prev;
            p_prev = std::mem::replace(&mut p, p_next);
            q_prev = std::mem::replace(&mut q, q_next);
            convergents.push((p.clone(), q.clone()));
        }
        Ok(ContinuedFraction {
            partial_quotients,
            convergents,
        })
    }

    /// `[0; a, a, …, a]` with `len` quotients.
    pub fn constant(a: u64, len: usize) -> Result<Self> {
        ContinuedFraction::new(vec![a; len])
    }

    /// Shortest constant expansion `[0; a, a, …]` that pins its infinite
    /// value down to `2^-bits`.
    pub fn constant_prefix(a: u64, bits: u64) -> Result<Self> {
        let mut len = 2;
        loop {
            let cf = ContinuedFraction::constant(a, len)?;
            if cf.prefix_error_bits() >= bits + 2 {
                return Ok(cf);
            }
            len += 1;
        }
    }

    pub fn depth(&self) -> usize {
        self.partial_quotients.len()
    }

    /// `(p_K, q_K)`.
    pub fn last(&self) -> &(BigUint, BigUint) {
        self.convergents.last().expect("at least one convergent")
    }

    /// A guaranteed number of correct bits when the expansion is the prefix
    /// of a longer one: `|x − p_K/q_K| < 1/(q_K q_{K+1}) ≤ 1/(q_K (q_K + q_{K−1}))`.
    pub fn prefix_error_bits(&self) -> u64 {
        let k = self.convergents.len() - 1;
        let q = &self.convergents[k].1;
        let q_prev = &self.convergents[k - 1].1;
        (q * (q + q_prev)).bits() - 1
    }

    pub fn max_quotient(&self) -> u64 {
        *self.partial_quotients.iter().max().expect("nonempty")
    }
}

/// `p_K/q_K` truncated to `bits` bits (error below `2^-bits`).
pub fn cf_to_number(cf: &ContinuedFraction, bits: u64) -> Result<DyadicNumber> {
    let (p, q) = cf.last();
    DyadicNumber::from_ratio(p, q, bits)
}

/// Like [`cf_to_number`], but treats `cf` as the prefix of an infinite
/// expansion and rejects it unless the prefix already determines the value
/// to within `2^{-bits-2}`.
pub fn cf_prefix_to_number(cf: &ContinuedFraction, bits: u64) -> Result<DyadicNumber> {
    let have = cf.prefix_error_bits();
    if have < bits + 2 {
        return Err(Error::InsufficientDepth {
            required: (bits + 2) as usize,
            actual: have as usize,
        });
    }
    cf_to_number(cf, bits)
}

/// Convergent-based evidence that `x` is badly approximable.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BadCertificate {
    pub max_quotient: u64,
    /// Classical lower bound `1/(M + 2)` for `inf_q q‖qx‖`.
    pub lower_bound: f64,
    /// `min_k q_k‖q_k x‖` over `1 ≤ k < K`.
    pub min_product: f64,
    /// Same minimum over the middle third `K/3 ≤ k ≤ 2K/3`: an estimate of
    /// `liminf q‖qx‖` that skips the early convergents and the late ones,
    /// which truncating the expansion distorts just as strongly.
    pub tail_min_product: f64,
}

/// Computes `q_k‖q_k x‖` exactly for `x = p_K/q_K`.
pub fn bad_certificate(cf: &ContinuedFraction) -> Result<BadCertificate> {
    let k_max = cf.depth();
    if k_max < 2 {
        return Err(Error::param("partial_quotients", "need at least two partial quotients"));
    }
    let (p, q) = cf.last();
    let product = |k: usize| -> f64 {
        let qk = &cf.convergents[k].1;
        let r = (qk * p).mod_floor(q);
        let dist = r.clone().min(q - &r);
        // q_k·dist/q_K
        ratio(&(qk * dist), q)
    };
    let all: Vec<f64> = (1..k_max).map(product).collect();
    let tail_lo = (k_max / 3).max(1);
    let tail_hi = (2 * k_max / 3).clamp(tail_lo, k_max - 1);
    let tail: Vec<f64> = (tail_lo..=tail_hi).map(product).collect();
    let m = cf.max_quotient();
    Ok(BadCertificate {
        max_quotient: m,
        lower_bound: 1.0 / (m as f64 + 2.0),
        min_product: all.iter().copied().fold(f64::INFINITY, f64::min),
        tail_min_product: tail.iter().copied().fold(f64::INFINITY, f64::min),
    })
}

fn ratio(num: &BigUint, den: &BigUint) -> f64 {
    let shift = den.bits().saturating_sub(60);
    let n = num >> shift;
    let d = den >> shift;
    n.to_f64().unwrap_or(f64::INFINITY) / d.to_f64().unwrap_or(f64::INFINITY)
}

/// A new running minimum of `q‖qx‖‖qy − γ‖`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LittlewoodRecord {
    pub q: u64,
    pub qx_dist: f64,
    pub qy_gamma_dist: f64,
    pub product: f64,
    /// `(log q)^{-1/2+ε}`.
    pub threshold: f64,
    pub below_threshold: bool,
    /// `q·2^{-B}`: how far `qx` may be from the value for the untruncated `x`.
    pub truncation_error: f64,
}

pub fn littlewood_threshold(q: u64, eps: f64) -> f64 {
    (q as f64).ln().powf(eps - 0.5)
}

/// Running minima of `q‖qx‖‖qy − γ‖` for `q = 2..=limit`.
///
/// Products are compared exactly; the scan stops early once the minimum hits 0.
pub fn liminf_scan(
    x: &DyadicNumber,
    y: &DyadicNumber,
    gamma: &DyadicNumber,
    limit: u64,
    eps: f64,
) -> Result<Vec<LittlewoodRecord>> {
    if limit < 2 {
        return Err(Error::param("q_max", "need q_max >= 2"));
    }
    if !(eps.is_finite() && eps > 0.0 && eps < 0.5) {
        return Err(Error::param("eps", "must lie in (0, 1/2)"));
    }
    let need = 64 + 64 - (limit.leading_zeros() as u64);
    let bits = x.bits().max(y.bits()).max(gamma.bits());
    let have = x.bits().min(y.bits());
    if have < need {
        return Err(Error::PrecisionShortfall {
            required: need,
            actual: have,
        });
    }
    let x_bits = x.bits();
    let x = x.with_bits(bits);
    let y = y.with_bits(bits);
    let g = gamma.with_bits(bits);
    let mut records = if bits <= 128 {
        scan_u128(&x, &y, &g, bits, limit, eps)
    } else {
        scan_big(&x, &y, &g, bits, limit, eps)
    };
    for r in &mut records {
        r.truncation_error = r.q as f64 * (-(x_bits as f64)).exp2();
    }
    Ok(records)
}

struct Minimum {
    exact: BigUint,
    approx: f64,
}

fn record(q: u64, d1: &BigUint, d2: &BigUint, bits: u64, eps: f64) -> LittlewoodRecord {
    let qx_dist = scaled_to_f64(d1, bits);
    let qy_gamma_dist = scaled_to_f64(d2, bits);
    let product = q as f64 * qx_dist * qy_gamma_dist;
    let threshold = littlewood_threshold(q, eps);
    LittlewoodRecord {
        q,
        qx_dist,
        qy_gamma_dist,
        product,
        threshold,
        below_threshold: product < threshold,
        truncation_error: 0.0,
    }
}

/// Shared bookkeeping: decide whether `(q, d1, d2)` sets a new minimum.
fn consider(
    best: &mut Option<Minimum>,
    out: &mut Vec<LittlewoodRecord>,
    q: u64,
    d1: BigUint,
    d2: BigUint,
    bits: u64,
    eps: f64,
) {
    let approx = q as f64 * scaled_to_f64(&d1, bits) * scaled_to_f64(&d2, bits);
    let better = match best {
        None => true,
        Some(m) if approx < m.approx * (1.0 - 1e-9) => true,
        Some(m) if approx <= m.approx * (1.0 + 1e-9) => {
            let exact = BigUint::from(q) * &d1 * &d2;
            exact < m.exact
        }
        _ => false,
    };
    if better {
        let exact = BigUint::from(q) * &d1 * &d2;
        out.push(record(q, &d1, &d2, bits, eps));
        *best = Some(Minimum { exact, approx });
    }
}

fn scan_u128(x: &DyadicNumber, y: &DyadicNumber, g: &DyadicNumber, bits: u64, limit: u64, eps: f64) -> Vec<LittlewoodRecord> {
    let mask: u128 = if bits == 128 { u128::MAX } else { (1u128 << bits) - 1 };
    let to = |d: &DyadicNumber| -> u128 {
        d.mantissa().iter_u64_digits().take(2).enumerate().fold(0u128, |acc, (i, w)| acc | (w as u128) << (64 * i))
    };
    let (xm, ym, gm) = (to(x), to(y), to(g));
    let dist = |v: u128| -> u128 {
        let v = v & mask;
        let alt = mask.wrapping_sub(v).wrapping_add(1) & mask;
        if v == 0 {
            0
        } else {
            v.min(alt)
        }
    };
    let mut out = Vec::new();
    let mut best: Option<Minimum> = None;
    let mut qx = xm;
    let mut qy = ym;
    for q in 2..=limit {
        qx = qx.wrapping_add(xm) & mask;
        qy = qy.wrapping_add(ym) & mask;
        let d1 = dist(qx);
        let d2 = dist(qy.wrapping_sub(gm) & mask);
        consider(&mut best, &mut out, q, BigUint::from(d1), BigUint::from(d2), bits, eps);
        if best.as_ref().is_some_and(|m| m.exact.is_zero()) {
            break;
        }
    }
    out
}

fn scan_big(x: &DyadicNumber, y: &DyadicNumber, g: &DyadicNumber, bits: u64, limit: u64, eps: f64) -> Vec<LittlewoodRecord> {
    let one = BigUint::one() << bits;
    let dist = |v: &BigUint| -> BigUint {
        let alt = &one - v;
        if v.is_zero() {
            BigUint::zero()
        } else {
            v.clone().min(alt)
        }
    };
    let mut out = Vec::new();
    let mut best: Option<Minimum> = None;
    let mut qx = x.mantissa().clone();
    let mut qy = y.mantissa().clone();
    for q in 2..=limit {
        qx += x.mantissa();
        if qx >= one {
            qx -= &one;
        }
        qy += y.mantissa();
        if qy >= one {
            qy -= &one;
        }
        let shifted = if qy >= *g.mantissa() {
            &qy - g.mantissa()
        } else {
            &qy + &one - g.mantissa()
        };
        consider(&mut best, &mut out, q, dist(&qx), dist(&shifted), bits, eps);
        if best.as_ref().is_some_and(|m| m.exact.is_zero()) {
            break;
        }
    }
    out
}
