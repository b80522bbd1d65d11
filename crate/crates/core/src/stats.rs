//! Small numeric helpers shared by the estimators.

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub rms_residual: f64,
    /// Standard error of the slope (0 for exact or two-point fits).
    pub slope_stderr: f64,
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> LineFit {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = pairwise_sum(xs) / n;
    let my = pairwise_sum(ys) / n;
    let sxx: f64 = pairwise_sum(&xs.iter().map(|x| (x - mx) * (x - mx)).collect::<Vec<_>>());
    let sxy: f64 = pairwise_sum(
        &xs.iter()
            .zip(ys)
            .map(|(x, y)| (x - mx) * (y - my))
            .collect::<Vec<_>>(),
    );
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - slope * x - intercept;
            r * r
        })
        .sum();
    let slope_stderr = if xs.len() > 2 && sxx > 0.0 {
        (sse / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    LineFit {
        slope,
        intercept,
        rms_residual: (sse / n).sqrt(),
        slope_stderr,
    }
}

/// Pairwise (cascade) summation; the result depends only on the input order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    pairwise_sum(xs) / xs.len() as f64
}

/// Means of the first and last quarter of a series (at least one element each).
pub fn quartile_means(xs: &[f64]) -> (f64, f64) {
    let q = (xs.len() / 4).max(1);
    (mean(&xs[..q]), mean(&xs[xs.len() - q..]))
}

/// A closed interval known to contain some quantity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Bracket {
    pub lower: f64,
    pub upper: f64,
}

impl Bracket {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

/// Integral comparison for `Σ_{n≥start} coef·n^{-p}` with `p > 1`:
/// `∫_start^∞ ≤ tail ≤ start^{-p} + ∫_start^∞` (times `coef`).
pub fn power_tail_integral(coef: f64, p: f64, start: u64) -> Bracket {
    let s = start as f64;
    let integral = coef * s.powf(1.0 - p) / (p - 1.0);
    Bracket {
        lower: integral,
        upper: integral + coef * s.powf(-p),
    }
}

/// `Σ_{n≥start} coef·n^{-p}` bracketed by an explicit partial sum up to
/// `cutoff` plus integral bounds for the remainder.
pub fn power_tail(coef: f64, p: f64, start: u64, cutoff: u64) -> Bracket {
    let start = start.max(1);
    let last = cutoff.max(start);
    // Smallest terms first, with compensation.
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for n in (start..=last).rev() {
        let term = (n as f64).powf(-p);
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
    }
    let partial = coef * (sum + comp);
    let rest = power_tail_integral(coef, p, last + 1);
    Bracket {
        lower: partial + rest.lower,
        upper: partial + rest.upper,
    }
}
