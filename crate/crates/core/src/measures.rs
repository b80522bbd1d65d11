//! Probability measures on `[0, 1)`: Fourier transforms, samplers and
//! empirical Fourier-decay fits.

use std::f64::consts::PI;

use num_bigint::BigUint;
use num_complex::Complex64;
use num_traits::{One, Zero};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::dyadic::DyadicNumber;
use crate::error::{Error, Result};
use crate::fixed::Fixed;
use crate::rng::uniform_bits;
use crate::stats;

/// Magnitudes below this are treated as numerically zero by the decay fit.
pub const MAGNITUDE_FLOOR: f64 = 1e-14;

/// Reported decay exponent when every magnitude is below [`MAGNITUDE_FLOOR`].
pub const DECAY_CAP: f64 = 16.0;

/// Truncation target for infinite products.
const PRODUCT_TOLERANCE: f64 = 1e-13;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MeasureModel {
    /// Lebesgue measure on `[0, 1)`.
    Lebesgue01,
    /// Self-similar measure: random base-`base` expansion with digits drawn
    /// uniformly from `digits`.
    Cantor { base: u32, digits: Vec<u32> },
    /// Finitely many atoms.
    Atomic { points: Vec<f64>, weights: Vec<f64> },
    /// Piecewise-constant density on `values.len()` equal panels of `[0, 1)`.
    Density { values: Vec<f64> },
}

impl MeasureModel {
    pub fn lebesgue() -> Self {
        MeasureModel::Lebesgue01
    }

    /// The middle-thirds Cantor measure.
    pub fn cantor3() -> Self {
        MeasureModel::Cantor {
            base: 3,
            digits: vec![0, 2],
        }
    }

    /// Short names accepted on the command line.
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "lebesgue" | "lebesgue01" => Ok(MeasureModel::Lebesgue01),
            "cantor" | "cantor3" => Ok(MeasureModel::cantor3()),
            _ => Err(Error::param("model", format!("unknown measure `{name}`"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MeasureModel::Lebesgue01 => Ok(()),
            MeasureModel::Cantor { base, digits } => {
                if *base < 2 {
                    return Err(Error::param("base", "must be at least 2"));
                }
                if digits.is_empty() || digits.iter().any(|d| d >= base) {
                    return Err(Error::param("digits", "need a nonempty set of digits below the base"));
                }
                let mut sorted = digits.clone();
                sorted.sort_unstable();
                sorted.dedup();
                if sorted.len() != digits.len() {
                    return Err(Error::param("digits", "digits must be distinct"));
                }
                Ok(())
            }
            MeasureModel::Atomic { points, weights } => {
                if points.is_empty() || points.len() != weights.len() {
                    return Err(Error::param("weights", "one weight per atom required"));
                }
                if points.iter().any(|p| !(0.0..1.0).contains(p)) {
                    return Err(Error::param("points", "atoms must lie in [0, 1)"));
                }
                if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
                    return Err(Error::param("weights", "weights must be nonnegative"));
                }
                if (stats::pairwise_sum(weights) - 1.0).abs() > 1e-12 {
                    return Err(Error::param("weights", "weights must sum to 1"));
                }
                Ok(())
            }
            MeasureModel::Density { values } => {
                if values.is_empty() || values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return Err(Error::param("values", "need nonnegative panel densities"));
                }
                if (stats::mean(values) - 1.0).abs() > 1e-12 {
                    return Err(Error::param("values", "density must integrate to 1"));
                }
                Ok(())
            }
        }
    }

    /// `μ̂(ξ) = ∫ e^{2πixξ} dμ(x)`.
    pub fn fourier(&self, xi: f64) -> Complex64 {
        match self {
            MeasureModel::Lebesgue01 => lebesgue_fourier(xi),
            MeasureModel::Cantor { base, digits } => cantor_fourier(*base, digits, xi),
            MeasureModel::Atomic { points, weights } => points
                .iter()
                .zip(weights)
                .map(|(&p, &w)| w * expi(xi * p))
                .sum(),
            MeasureModel::Density { values } => {
                let width = 1.0 / values.len() as f64;
                if xi == 0.0 {
                    return Complex64::new(stats::pairwise_sum(values) * width, 0.0);
                }
                let denom = Complex64::new(0.0, 2.0 * PI * xi);
                values
                    .iter()
                    .enumerate()
                    .map(|(j, &h)| {
                        let a = j as f64 * width;
                        let b = a + width;
                        h * (expi(xi * b) - expi(xi * a)) / denom
                    })
                    .sum()
            }
        }
    }

    /// Distribution function `μ([0, x])`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        match self {
            MeasureModel::Lebesgue01 => x,
            MeasureModel::Cantor { base, digits } => {
                let m = *base as f64;
                let share = 1.0 / digits.len() as f64;
                let mut sorted = digits.clone();
                sorted.sort_unstable();
                let (mut acc, mut scale, mut rest) = (0.0, 1.0, x);
                for _ in 0..64 {
                    let scaled = rest * m;
                    let cell = scaled.floor().min(m - 1.0) as u32;
                    rest = scaled - cell as f64;
                    let below = sorted.iter().filter(|&&d| d < cell).count() as f64;
                    acc += scale * share * below;
                    if !sorted.contains(&cell) {
                        return acc;
                    }
                    scale *= share;
                }
                acc
            }
            MeasureModel::Atomic { points, weights } => points
                .iter()
                .zip(weights)
                .filter(|(&p, _)| p <= x)
                .map(|(_, &w)| w)
                .sum(),
            MeasureModel::Density { values } => {
                let k = values.len() as f64;
                let full = (x * k).floor() as usize;
                let head: f64 = values[..full].iter().sum::<f64>() / k;
                let partial = if full < values.len() {
                    values[full] * (x - full as f64 / k)
                } else {
                    0.0
                };
                head + partial
            }
        }
    }

    /// A `bits`-bit dyadic sample; deterministic given the stream.
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R, bits: u64) -> Result<DyadicNumber> {
        if bits < 64 {
            return Err(Error::param("bits", "sampling needs at least 64 bits"));
        }
        match self {
            MeasureModel::Lebesgue01 => DyadicNumber::new(uniform_bits(rng, bits), bits),
            MeasureModel::Cantor { base, digits } => {
                // ceil(bits·log 2 / log m) digits resolve the value to 2^-bits.
                let depth = (bits as f64 * 2f64.ln() / (*base as f64).ln()).ceil() as usize;
                let m = BigUint::from(*base);
                let mut num = BigUint::zero();
                for _ in 0..depth {
                    let d = digits[rng.random_range(0..digits.len())];
                    num = num * &m + BigUint::from(d);
                }
                let den = m.pow(depth as u32);
                DyadicNumber::from_ratio(&num, &den, bits)
            }
            MeasureModel::Atomic { points, weights } => {
                let dist = WeightedIndex::new(weights)
                    .map_err(|e| Error::param("weights", e.to_string()))?;
                let p = points[dist.sample(rng)];
                Ok(DyadicNumber::from_fixed(Fixed::from_unit_f64(p)?, bits))
            }
            MeasureModel::Density { values } => {
                let dist = WeightedIndex::new(values)
                    .map_err(|e| Error::param("values", e.to_string()))?;
                let panel = dist.sample(rng);
                let u = uniform_bits(rng, bits);
                let panels = BigUint::from(values.len());
                let num = (BigUint::from(panel) << bits) + u;
                let den = panels << bits;
                DyadicNumber::from_ratio(&num, &den, bits)
            }
        }
    }
}

fn expi(t: f64) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * t)
}

fn lebesgue_fourier(xi: f64) -> Complex64 {
    if xi == 0.0 {
        return Complex64::one();
    }
    // e^{πiξ}·sin(πξ)/(πξ)
    let x = PI * xi;
    Complex64::from_polar(x.sin() / x, x)
}

fn cantor_fourier(base: u32, digits: &[u32], xi: f64) -> Complex64 {
    let m = base as f64;
    let dmax = *digits.iter().max().unwrap_or(&0) as f64;
    let share = 1.0 / digits.len() as f64;
    // Stop once Σ_{k>K} 2π|ξ|·dmax/m^k < tolerance.
    let mut scale = 1.0 / m;
    let mut out = Complex64::one();
    loop {
        let u = xi * scale;
        let factor: Complex64 = digits.iter().map(|&d| expi(u * d as f64)).sum::<Complex64>() * share;
        out *= factor;
        let tail = 2.0 * PI * xi.abs() * dmax * scale / (m - 1.0);
        if tail < PRODUCT_TOLERANCE || out.norm() == 0.0 {
            return out;
        }
        scale /= m;
    }
}

/// Frequencies `factor·base^j` for `j = lo..=hi`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub base: f64,
    pub lo: i32,
    pub hi: i32,
    #[serde(default = "one_f64")]
    pub factor: f64,
}

fn one_f64() -> f64 {
    1.0
}

impl FrequencyGrid {
    /// Parses `powB:lo:hi` or `powB:lo:hi:factor` (factor may be `p/q`).
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::param("xi_grid", format!("expected powB:lo:hi[:factor], got `{s}`"));
        let parts: Vec<&str> = s.split(':').collect();
        if !(3..=4).contains(&parts.len()) {
            return Err(bad());
        }
        let base: f64 = parts[0].strip_prefix("pow").ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let lo: i32 = parts[1].parse().map_err(|_| bad())?;
        let hi: i32 = parts[2].parse().map_err(|_| bad())?;
        let factor = match parts.get(3) {
            None => 1.0,
            Some(f) => match f.split_once('/') {
                Some((p, q)) => {
                    p.parse::<f64>().map_err(|_| bad())? / q.parse::<f64>().map_err(|_| bad())?
                }
                None => f.parse().map_err(|_| bad())?,
            },
        };
        let grid = FrequencyGrid { base, lo, hi, factor };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.base > 1.0 && self.base.is_finite()) {
            return Err(Error::param("xi_grid", "base must exceed 1"));
        }
        if !(self.factor > 0.0 && self.factor.is_finite()) {
            return Err(Error::param("xi_grid", "factor must be positive"));
        }
        if self.hi - self.lo < 2 {
            return Err(Error::param("xi_grid", "need at least three frequencies"));
        }
        if self.frequencies()[0] < 1.0 {
            return Err(Error::param("xi_grid", "frequencies must be at least 1"));
        }
        Ok(())
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (self.lo..=self.hi).map(|j| self.factor * self.base.powi(j)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayRow {
    pub xi: f64,
    pub re: f64,
    pub im: f64,
    pub magnitude: f64,
    /// Largest magnitude over grid frequencies in the same dyadic band.
    pub band_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FourierDecayReport {
    pub rows: Vec<DecayRow>,
    /// Slope of `log band_max` against `log ξ`.
    pub slope: f64,
    /// `−2·slope`, unclamped.
    pub s_fit: f64,
    /// `s_fit` clamped below at 0.
    pub s: f64,
    /// `s` capped at 1, the largest Fourier dimension on `[0, 1]`.
    pub dimension: f64,
    pub residual: f64,
}

/// Fits `|μ̂(ξ)| = O(|ξ|^{-s/2})` on the upper envelope of the magnitudes.
///
/// Magnitudes are grouped by dyadic band `[2^j, 2^{j+1})`; the fit runs
/// through the band maxima, which sidesteps exact zeros such as those of
/// `λ̂` at the integers.
pub fn fourier_decay_exponent(model: &MeasureModel, grid: &FrequencyGrid) -> Result<FourierDecayReport> {
    model.validate()?;
    grid.validate()?;
    let xs = grid.frequencies();
    let values: Vec<Complex64> = xs.iter().map(|&xi| model.fourier(xi)).collect();
    let bands: Vec<i32> = xs.iter().map(|xi| xi.log2().floor() as i32).collect();

    let mut envelope: Vec<(f64, f64)> = Vec::new();
    let mut band_max = vec![0.0; xs.len()];
    let mut i = 0;
    while i < xs.len() {
        let mut j = i;
        while j < xs.len() && bands[j] == bands[i] {
            j += 1;
        }
        let (arg, max) = (i..j)
            .map(|k| (xs[k], values[k].norm()))
            .fold((xs[i], -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        band_max[i..j].iter_mut().for_each(|b| *b = max);
        if max >= MAGNITUDE_FLOOR {
            envelope.push((arg, max));
        }
        i = j;
    }

    let rows: Vec<DecayRow> = xs
        .iter()
        .zip(&values)
        .zip(&band_max)
        .map(|((&xi, v), &b)| DecayRow {
            xi,
            re: v.re,
            im: v.im,
            magnitude: v.norm(),
            band_max: b,
        })
        .collect();

    if envelope.is_empty() {
        return Ok(FourierDecayReport {
            rows,
            slope: -DECAY_CAP / 2.0,
            s_fit: DECAY_CAP,
            s: DECAY_CAP,
            dimension: 1.0,
            residual: 0.0,
        });
    }
    if envelope.len() < 2 {
        return Err(Error::Degenerate(
            "fewer than two frequency bands above the magnitude floor".into(),
        ));
    }
    let lx: Vec<f64> = envelope.iter().map(|(x, _)| x.ln()).collect();
    let ly: Vec<f64> = envelope.iter().map(|(_, y)| y.ln()).collect();
    let fit = stats::least_squares(&lx, &ly);
    let s_fit = -2.0 * fit.slope;
    let s = s_fit.max(0.0);
    Ok(FourierDecayReport {
        rows,
        slope: fit.slope,
        s_fit,
        s,
        dimension: s.min(1.0),
        residual: fit.rms_residual,
    })
}
