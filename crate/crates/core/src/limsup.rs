//! Finite truncations of the limsup set `W_{y,α}`, hit counting and the
//! second-moment (Chung–Erdős) machinery.

use num_bigint::BigUint;
use serde::Serialize;

use crate::arcs::{ball_intersection, ball_len, ArcUnion};
use crate::error::{Error, Result};
use crate::fixed::{power_radius, Fixed};
use crate::sequences::IndexedPoints;
use crate::stats::{self, Bracket};

/// Partial sums of the Borel–Cantelli tail are taken up to this index.
pub const TAIL_CUTOFF: u64 = 10_000_000;

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::param("alpha", "must be a positive finite number"));
    }
    Ok(())
}

fn check_range(points: &IndexedPoints, m: usize, n: usize) -> Result<()> {
    if !points.covers(m, n) {
        return Err(Error::param(
            "range",
            format!(
                "[{m}..{n}] is not inside the orbit range [{}..{}]",
                points.start,
                points.start + points.len().saturating_sub(1)
            ),
        ));
    }
    Ok(())
}

/// `⋃_{n=m}^{n} B(x_n, n^{-α})`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimsupTruncation {
    pub alpha: f64,
    pub start: usize,
    pub end: usize,
    pub arcs: ArcUnion,
}

impl LimsupTruncation {
    pub fn measure(&self) -> Fixed {
        self.arcs.measure()
    }
}

pub fn radii(alpha: f64, m: usize, n: usize) -> Vec<Fixed> {
    (m..=n).map(|k| power_radius(k as u64, alpha)).collect()
}

pub fn truncated_set(points: &IndexedPoints, alpha: f64, m: usize, n: usize) -> Result<LimsupTruncation> {
    check_alpha(alpha)?;
    check_range(points, m, n)?;
    let arcs = ArcUnion::from_balls(points.range(m, n), &radii(alpha, m, n))?;
    Ok(LimsupTruncation {
        alpha,
        start: m,
        end: n,
        arcs,
    })
}

/// `λ(⋃_{n=m}^{N} B(x_n, n^{-α}))` for each `N` in `checkpoints` (ascending).
///
/// Builds the union incrementally: each stage merges the new balls into the
/// previous union, so the whole profile costs about as much as one union.
pub fn measure_profile(points: &IndexedPoints, alpha: f64, m: usize, checkpoints: &[usize]) -> Result<Vec<Fixed>> {
    check_alpha(alpha)?;
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("checkpoints", "must be strictly increasing"));
    }
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut union = ArcUnion::empty();
    let mut next = m;
    for &n in checkpoints {
        check_range(points, m, n)?;
        if n >= next {
            let stage = ArcUnion::from_balls(points.range(next, n), &radii(alpha, next, n))?;
            union = union.union(&stage);
            next = n + 1;
        }
        out.push(union.measure());
    }
    Ok(out)
}

/// `#{n ∈ [m, n_max] : ‖x_n − γ‖ < n^{-α}}`.
pub fn hit_count(points: &IndexedPoints, alpha: f64, gamma: Fixed, m: usize, n: usize) -> Result<usize> {
    Ok(hits(points, alpha, gamma, m, n)?.len())
}

/// Indices `n` in `[m, n_max]` with `‖x_n − γ‖ < n^{-α}`.
pub fn hits(points: &IndexedPoints, alpha: f64, gamma: Fixed, m: usize, n: usize) -> Result<Vec<usize>> {
    check_alpha(alpha)?;
    check_range(points, m, n)?;
    let g = gamma.wrap();
    Ok((m..=n)
        .filter(|&k| points.get(k).circle_dist(g) < power_radius(k as u64, alpha))
        .collect())
}

/// Exact first and second moments of a family of balls and the union measure.
///
/// `S = Σ λ(A_k)` and `C = Σ_{k,l} λ(A_k ∩ A_l)` over ordered pairs including
/// the diagonal. Both are exact integers in units of `2^-96`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChungErdosReport {
    pub block_start: usize,
    pub block_end: usize,
    pub s: f64,
    pub c: f64,
    pub bound: f64,
    pub exact_union: f64,
    /// Exact comparison `S² ≤ λ(⋃A_k)·C`.
    pub holds: bool,
    /// `Σ λ(A_k)²`, a lower bound for `C`.
    pub diagonal_sq: f64,
    #[serde(skip)]
    pub s_raw: BigUint,
    #[serde(skip)]
    pub c_raw: BigUint,
    #[serde(skip)]
    pub union_raw: BigUint,
}

fn scaled(x: &BigUint, shift: u32) -> f64 {
    crate::dyadic::scaled_to_f64(x, shift as u64)
}

/// Chung–Erdős report for arbitrary balls `B(centers[i], radii[i])`.
pub fn chung_erdos_balls(centers: &[Fixed], radii: &[Fixed]) -> Result<ChungErdosReport> {
    if centers.len() != radii.len() || centers.is_empty() {
        return Err(Error::param("radii", "need one radius per center and at least one ball"));
    }
    let k = centers.len();
    let lens: Vec<Fixed> = radii.iter().map(|&r| ball_len(r)).collect();
    let s_raw: BigUint = lens.iter().map(|l| BigUint::from(l.raw())).sum();
    let diag: BigUint = lens.iter().map(|l| BigUint::from(l.raw()).pow(2)).sum();

    let rmax = radii.iter().copied().max().unwrap_or(Fixed::ZERO);
    let mut off = BigUint::default();
    if rmax >= Fixed::from_raw(Fixed::HALF.raw() >> 1) {
        for i in 0..k {
            for j in i + 1..k {
                off += ball_intersection(centers[i], radii[i], centers[j], radii[j]).raw();
            }
        }
    } else {
        // Every radius is below 1/4, so a pair can only overlap on one side
        // and is visited once: from whichever center precedes the other
        // within reach going counter-clockwise.
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by_key(|&i| centers[i].wrap());
        for (pos, &i) in order.iter().enumerate() {
            let ci = centers[i].wrap();
            let reach = radii[i] + rmax;
            for step in 1..k {
                let j = order[(pos + step) % k];
                let wrapped = pos + step >= k;
                let forward = match centers[j].wrap().sub_mod1(ci) {
                    d if wrapped && d == Fixed::ZERO => Fixed::ONE,
                    d => d,
                };
                if forward >= reach {
                    break;
                }
                off += ball_intersection(ci, radii[i], centers[j], radii[j]).raw();
            }
        }
    }
    // The diagonal contributes λ(A_k ∩ A_k) = λ(A_k), i.e. S itself.
    let c_raw = &s_raw + (off << 1u32);
    let union = ArcUnion::from_balls(centers, radii)?;
    let union_raw = BigUint::from(union.measure().raw());
    if c_raw == BigUint::default() {
        return Err(Error::Degenerate("all balls are empty, C = 0".into()));
    }
    let lhs = &s_raw * &s_raw;
    let rhs = &union_raw * &c_raw;
    let s = scaled(&s_raw, 96);
    let c = scaled(&c_raw, 96);
    Ok(ChungErdosReport {
        block_start: 0,
        block_end: 0,
        s,
        c,
        bound: s * s / c,
        exact_union: union.measure().to_f64(),
        holds: lhs <= rhs,
        diagonal_sq: scaled(&diag, 192),
        s_raw,
        c_raw,
        union_raw,
    })
}

/// Chung–Erdős report for the arcs `A_k = B(x_k, k^{-α})`, `k = m..=n`.
pub fn chung_erdos(points: &IndexedPoints, alpha: f64, m: usize, n: usize) -> Result<ChungErdosReport> {
    check_alpha(alpha)?;
    check_range(points, m, n)?;
    let mut r = chung_erdos_balls(points.range(m, n), &radii(alpha, m, n))?;
    r.block_start = m;
    r.block_end = n;
    Ok(r)
}

/// Closed-form bounds on a block `[n_j, n_{j+1}]` for `0 < α < 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BlockBounds {
    /// `Σ_{k=n_j}^{n_{j+1}} 2k^{-α}`.
    pub s_exact: f64,
    /// Upper bound for the averaged second moment:
    /// `S + 16/(1−α)²·(n_{j+1}+1)^{2−2α} + 16c/(1−α)·(n_{j+1}+1)^{1−α}`.
    pub second_moment_bound: f64,
    /// Lower bound for the first moment: `2/(1−α)·(n_{j+1}^{1−α} − n_j^{1−α})`.
    pub first_moment_bound: f64,
}

/// `c` absorbs the sum of the averaged cross terms `Σ_k (l−k)^{-1-τε}`.
pub fn analytic_block_bounds(alpha: f64, lo: u64, hi: u64, c: f64) -> Result<BlockBounds> {
    if alpha == 1.0 {
        return Err(Error::param("alpha", "the block bounds degenerate at alpha = 1"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param("alpha", "block bounds need 0 < alpha < 1"));
    }
    if lo == 0 || lo >= hi {
        return Err(Error::param("block", "need 1 <= n_j < n_{j+1}"));
    }
    let terms: Vec<f64> = (lo..=hi).map(|k| 2.0 * (k as f64).powf(-alpha)).collect();
    let s_exact = stats::pairwise_sum(&terms);
    let e = 1.0 - alpha;
    let top = (hi + 1) as f64;
    Ok(BlockBounds {
        s_exact,
        second_moment_bound: s_exact + 16.0 / (e * e) * top.powf(2.0 * e) + 16.0 * c / e * top.powf(e),
        first_moment_bound: 2.0 / e * ((hi as f64).powf(e) - (lo as f64).powf(e)),
    })
}

/// Brackets for `Σ_{n≥N} 2n^{-α}` with `α > 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TailReport {
    /// Pure integral comparison.
    pub integral: Bracket,
    /// Exact partial sum up to the cutoff plus integral bounds for the rest.
    pub refined: Bracket,
}

pub fn borel_cantelli_tail(alpha: f64, n: u64) -> Result<TailReport> {
    borel_cantelli_tail_with_cutoff(alpha, n, TAIL_CUTOFF)
}

pub fn borel_cantelli_tail_with_cutoff(alpha: f64, n: u64, cutoff: u64) -> Result<TailReport> {
    if !(alpha > 1.0 && alpha.is_finite()) {
        return Err(Error::Divergent(format!("sum of 2n^-alpha diverges for alpha = {alpha}")));
    }
    if n == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    Ok(TailReport {
        integral: stats::power_tail_integral(2.0, alpha, n),
        refined: stats::power_tail(2.0, alpha, n, cutoff.max(n)),
    })
}
