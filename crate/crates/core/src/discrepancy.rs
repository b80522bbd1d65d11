//! Extreme discrepancy `D_N`, block discrepancy `D̃_N`, minimum gap `d_N`
//! and power-law decay fits.
//!
//! Discrepancy follows the counting convention (no division by `N`) and
//! takes the supremum over all sub-intervals of `[0, 1)`, open, closed or
//! half-open. Values are exact: every candidate is `k·2^96 − N·L` in raw
//! fixed-point units for an integer count `k` and a dyadic length `L`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fixed::{Fixed, FRAC_BITS};
use crate::stats;

/// One endpoint of a witness interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Endpoint {
    pub at: Fixed,
    /// Whether the endpoint itself belongs to the interval.
    pub closed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Interval {
    pub left: Endpoint,
    pub right: Endpoint,
}

impl Interval {
    pub fn len(&self) -> Fixed {
        self.right.at - self.left.at
    }

    pub fn is_empty(&self) -> bool {
        self.right.at < self.left.at
            || (self.right.at == self.left.at && !(self.left.closed && self.right.closed))
    }

    pub fn contains(&self, x: Fixed) -> bool {
        let after_left = if self.left.closed { x >= self.left.at } else { x > self.left.at };
        let before_right = if self.right.closed { x <= self.right.at } else { x < self.right.at };
        after_left && before_right
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiscrepancyReport {
    pub n: usize,
    /// The supremum, `raw / 2^96`.
    pub raw: i128,
    pub value: f64,
    /// An interval attaining the supremum. A degenerate closed interval
    /// `[x, x]` stands for intervals shrinking onto `x`.
    pub witness: Interval,
}

impl DiscrepancyReport {
    fn new(n: usize, raw: i128, witness: Interval) -> Self {
        DiscrepancyReport {
            n,
            raw,
            value: raw as f64 / (1u128 << FRAC_BITS) as f64,
            witness,
        }
    }
}

const SCALE: i128 = 1i128 << FRAC_BITS;

/// Distinct sorted values with multiplicities.
fn grouped(points: &[Fixed]) -> Vec<(Fixed, i128)> {
    let mut sorted = points.to_vec();
    sorted.sort_unstable();
    let mut out: Vec<(Fixed, i128)> = Vec::with_capacity(sorted.len());
    for p in sorted {
        match out.last_mut() {
            Some((v, m)) if *v == p => *m += 1,
            _ => out.push((p, 1)),
        }
    }
    out
}

fn check_points(points: &[Fixed]) -> Result<()> {
    if points.iter().any(|p| !p.is_unit()) {
        return Err(Error::param("points", "values must lie in [0, 1)"));
    }
    if points.len() >= 1 << 30 {
        return Err(Error::param("points", "too many points for exact arithmetic"));
    }
    Ok(())
}

/// `D_N` of the first `n` points, in `O(N log N)`.
///
/// With sorted distinct values `v_1 < … < v_K`, `c_k = #{x ≤ v_k}` and
/// `c⁻_k = #{x < v_k}`, the largest excess is attained on a closed interval
/// `[v_i, v_j]`: `max_{i≤j} (c_j − N v_j) − (c⁻_i − N v_i)`; the largest
/// deficit on an open interval `(v_i, v_j)`:
/// `max_{i<j} (N v_j − c⁻_j) − (N v_i − c_i)`. Virtual endpoints at 0
/// (left) and 1 (right) cover intervals reaching the ends of `[0, 1)`.
pub fn discrepancy(points: &[Fixed], n: usize) -> Result<DiscrepancyReport> {
    if n == 0 {
        return Err(Error::param("N", "discrepancy of zero points is undefined"));
    }
    if n > points.len() {
        return Err(Error::param("N", format!("only {} points available", points.len())));
    }
    let pts = &points[..n];
    check_points(pts)?;
    let nn = n as i128;
    let groups = grouped(pts);

    // Excess: closed [left, right].
    // Left candidates carry key c⁻ − N v (minimize); right candidates c − N v (maximize).
    let mut best_excess: Option<(i128, Interval)> = None;
    let mut min_left: (i128, Endpoint) = (
        0,
        Endpoint {
            at: Fixed::ZERO,
            closed: true,
        },
    );
    let mut below = 0i128;
    for &(v, m) in &groups {
        let vr = v.raw() as i128;
        let left_key = below * SCALE - nn * vr;
        if left_key < min_left.0 {
            min_left = (left_key, Endpoint { at: v, closed: true });
        }
        below += m;
        let right_key = below * SCALE - nn * vr;
        let cand = right_key - min_left.0;
        if best_excess.as_ref().is_none_or(|(b, _)| cand > *b) {
            best_excess = Some((
                cand,
                Interval {
                    left: min_left.1,
                    right: Endpoint { at: v, closed: true },
                },
            ));
        }
    }
    // Right end of [0,1): [v_i, 1) with count N − c⁻_i, key N − N·1 = 0.
    {
        let cand = -min_left.0;
        let (b, _) = best_excess.as_ref().expect("nonempty");
        if cand > *b {
            best_excess = Some((
                cand,
                Interval {
                    left: min_left.1,
                    right: Endpoint {
                        at: Fixed::ONE,
                        closed: false,
                    },
                },
            ));
        }
    }

    // Deficit: open (left, right). Left key N v − c (minimize), right key N v − c⁻.
    let mut best_deficit: (i128, Interval) = (
        0,
        Interval {
            left: Endpoint {
                at: Fixed::ZERO,
                closed: false,
            },
            right: Endpoint {
                at: Fixed::ZERO,
                closed: false,
            },
        },
    );
    // Virtual left at 0: [0, ·) includes nothing below 0, key 0.
    let mut min_left: (i128, Endpoint) = (
        0,
        Endpoint {
            at: Fixed::ZERO,
            closed: true,
        },
    );
    let mut below = 0i128;
    for &(v, m) in &groups {
        let vr = v.raw() as i128;
        let right_key = nn * vr - below * SCALE;
        let cand = right_key - min_left.0;
        if cand > best_deficit.0 {
            best_deficit = (
                cand,
                Interval {
                    left: min_left.1,
                    right: Endpoint { at: v, closed: false },
                },
            );
        }
        below += m;
        let left_key = nn * vr - below * SCALE;
        if left_key < min_left.0 {
            min_left = (left_key, Endpoint { at: v, closed: false });
        }
    }
    {
        // Virtual right at 1: (v_i, 1) holds every point above v_i, key N·1 − N = 0.
        let cand = -min_left.0;
        if cand > best_deficit.0 {
            best_deficit = (
                cand,
                Interval {
                    left: min_left.1,
                    right: Endpoint {
                        at: Fixed::ONE,
                        closed: false,
                    },
                },
            );
        }
    }

    let (ex, ex_w) = best_excess.expect("nonempty");
    let (de, de_w) = best_deficit;
    Ok(if ex >= de {
        DiscrepancyReport::new(n, ex, ex_w)
    } else {
        DiscrepancyReport::new(n, de, de_w)
    })
}

/// `D̃_N`: discrepancy of the window `x_{N+1}, …, x_{2N}` with normalizer `N`.
pub fn block_discrepancy(points: &[Fixed], n: usize) -> Result<DiscrepancyReport> {
    if n == 0 {
        return Err(Error::param("N", "block discrepancy needs N ≥ 1"));
    }
    if 2 * n > points.len() {
        return Err(Error::param(
            "N",
            format!("window N+1..2N = {}..{} exceeds {} points", n + 1, 2 * n, points.len()),
        ));
    }
    discrepancy(&points[n..2 * n], n)
}

/// Discrepancy over arcs of the circle, wrapping arcs included.
///
/// The complement of a wrapping arc is a sub-interval of `[0, 1)` with the
/// opposite excess, so the two suprema coincide; this variant computes the
/// wrapping family explicitly and serves as a cross-check that `D_N` is
/// invariant under rotations.
pub fn circle_discrepancy(points: &[Fixed], n: usize) -> Result<i128> {
    let line = discrepancy(points, n)?;
    let pts = &points[..n];
    let nn = n as i128;
    let groups = grouped(pts);
    // Wrapping arc = [b, 1) ∪ [0, a] or variants; its excess is
    // N − count(complement) − N(1 − λ(complement)) = −(complement excess).
    // Enumerate complements as intervals between sorted values (both flags).
    let mut best = line.raw;
    let mut prefix = Vec::with_capacity(groups.len() + 1);
    prefix.push(0i128);
    for &(_, m) in &groups {
        prefix.push(prefix.last().unwrap() + m);
    }
    // Complement (v_i, v_j) open  → wrapping arc closed at both ends.
    // Complement [v_i, v_j] closed → wrapping arc open at both ends.
    for i in 0..groups.len() {
        for j in i..groups.len() {
            let len = (groups[j].0.raw() - groups[i].0.raw()) as i128;
            let open_count = if j > i { prefix[j] - prefix[i + 1] } else { 0 };
            let closed_count = prefix[j + 1] - prefix[i];
            for count in [open_count, closed_count] {
                let ex = count * SCALE - nn * len;
                best = best.max(ex.abs());
            }
        }
    }
    Ok(best)
}

/// Smallest circle distance between two of the first `n` points.
pub fn min_gap(points: &[Fixed], n: usize) -> Result<Fixed> {
    if n < 2 {
        return Err(Error::param("N", "minimum gap needs at least two points"));
    }
    if n > points.len() {
        return Err(Error::param("N", format!("only {} points available", points.len())));
    }
    check_points(&points[..n])?;
    let mut sorted = points[..n].to_vec();
    sorted.sort_unstable();
    let wrap = Fixed::ONE - (sorted[n - 1] - sorted[0]);
    let best = sorted
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(wrap, Fixed::min);
    // The wraparound distance is also bounded by the direct difference.
    Ok(best.min(sorted[n - 1].circle_dist(sorted[0])))
}

/// Power-law fit `D_N ≈ C·N^σ`, reported as `η = 1 − σ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    pub slope: f64,
    /// `1 − slope`, clamped to `[0, 1]`.
    pub eta: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
}

pub fn decay_fit(samples: &[(usize, f64)]) -> Result<DecayFit> {
    if samples.len() < 3 {
        return Err(Error::param("samples", "need at least three (N, D_N) samples"));
    }
    if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::param("samples", "N must be strictly increasing"));
    }
    if samples.iter().any(|&(n, d)| n == 0 || !(d > 0.0)) {
        return Err(Error::param("samples", "every D_N must be positive"));
    }
    let xs: Vec<f64> = samples.iter().map(|&(n, _)| (n as f64).ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|&(_, d)| d.ln()).collect();
    let fit = stats::least_squares(&xs, &ys);
    Ok(DecayFit {
        slope: fit.slope,
        eta: (1.0 - fit.slope).clamp(0.0, 1.0),
        intercept: fit.intercept,
        residual: fit.rms_residual,
    })
}
