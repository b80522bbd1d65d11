//! Dimension estimators: block measures `μ_N` with their Riesz energies and
//! Frostman ratios, box counting on truncations, and cover sums.

use rayon::prelude::*;
use serde::Serialize;

use crate::arcs::{ball_pieces, ArcUnion};
use crate::error::{Error, Result};
use crate::fixed::{power_radius, Fixed, FRAC_BITS};
use crate::limsup::{check_alpha, truncated_set};
use crate::sequences::IndexedPoints;
use crate::stats::{self, Bracket};

const UNIT: f64 = 1.0 / (1u128 << FRAC_BITS) as f64;

/// A maximal run of `[start, end)` on which the covering multiplicity is constant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Panel {
    pub start: Fixed,
    pub end: Fixed,
    pub multiplicity: u32,
}

impl Panel {
    pub fn width(&self) -> Fixed {
        self.end - self.start
    }
}

/// Normalized sum of indicator functions of equal-radius balls: the density
/// on a panel is `multiplicity / Σ(multiplicity·width)`, which equals
/// `multiplicity / (2N·r)` whenever the radius is below one half.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockMeasure {
    pub n: usize,
    pub alpha: f64,
    pub radius: Fixed,
    pub panels: Vec<Panel>,
    pub support: ArcUnion,
    /// `Σ multiplicity·width` in units of `2^-96`.
    pub normalizer: u128,
}

impl BlockMeasure {
    /// Normalized sum of the indicators of `B(c, radius)` over `centers`.
    pub fn from_balls(centers: &[Fixed], radius: Fixed) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::param("centers", "need at least one ball"));
        }
        if radius == Fixed::ZERO {
            return Err(Error::param("radius", "must be positive"));
        }
        let mut events: Vec<(Fixed, i32)> = Vec::with_capacity(4 * centers.len());
        let mut arcs = Vec::with_capacity(2 * centers.len());
        for &c in centers {
            for arc in ball_pieces(c, radius).0.into_iter().flatten() {
                events.push((arc.start, 1));
                events.push((arc.end, -1));
                arcs.push(arc);
            }
        }
        events.sort_unstable();
        let mut panels = Vec::new();
        let mut level: i32 = 0;
        let mut normalizer: u128 = 0;
        let mut i = 0;
        while i < events.len() {
            let at = events[i].0;
            while i < events.len() && events[i].0 == at {
                level += events[i].1;
                i += 1;
            }
            if level > 0 && i < events.len() {
                let p = Panel {
                    start: at,
                    end: events[i].0,
                    multiplicity: level as u32,
                };
                normalizer += p.multiplicity as u128 * p.width().raw();
                panels.push(p);
            }
        }
        Ok(BlockMeasure {
            n: centers.len(),
            alpha: f64::NAN,
            radius,
            panels,
            support: ArcUnion::normalize(arcs),
            normalizer,
        })
    }

    pub fn density(&self, panel: &Panel) -> f64 {
        panel.multiplicity as f64 / (self.normalizer as f64 * UNIT)
    }

    pub fn panel_mass(&self, panel: &Panel) -> f64 {
        (panel.multiplicity as u128 * panel.width().raw()) as f64 / self.normalizer as f64
    }

    pub fn total_mass(&self) -> f64 {
        let masses: Vec<f64> = self.panels.iter().map(|p| self.panel_mass(p)).collect();
        stats::pairwise_sum(&masses)
    }

    pub fn max_density(&self) -> f64 {
        self.panels.iter().map(|p| self.density(p)).fold(0.0, f64::max)
    }

    /// `μ([a, b])` for `0 ≤ a ≤ b ≤ 1` on the line.
    pub fn interval_mass(&self, a: Fixed, b: Fixed) -> f64 {
        let mut acc: u128 = 0;
        for p in &self.panels {
            let lo = p.start.max(a);
            let hi = p.end.min(b);
            if hi > lo {
                acc += p.multiplicity as u128 * (hi - lo).raw();
            }
        }
        acc as f64 / self.normalizer as f64
    }
}

/// `μ_N`: balls of radius `(2N)^{-α}` around `x_{N+1}, …, x_{2N}`.
pub fn block_measure(points: &IndexedPoints, alpha: f64, n: usize) -> Result<BlockMeasure> {
    check_alpha(alpha)?;
    if n == 0 || !points.covers(n + 1, 2 * n) {
        return Err(Error::param("n", format!("orbit does not cover indices {}..={}", n + 1, 2 * n)));
    }
    let radius = power_radius(2 * n as u64, alpha);
    let mut bm = BlockMeasure::from_balls(points.range(n + 1, 2 * n), radius)?;
    bm.n = n;
    bm.alpha = alpha;
    Ok(bm)
}

fn check_energy_exponent(t: f64) -> Result<()> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::param("t", "energy exponent must lie in (0, 1)"));
    }
    Ok(())
}

/// `∬ |x−y|^{-t}` over `[0,w1] × [g+w1, g+w1+w2]`: two panels `g ≥ 0` apart.
pub fn panel_pair_integral(w1: f64, gap: f64, w2: f64, t: f64) -> f64 {
    let centre = gap + 0.5 * (w1 + w2);
    let rho = w1.max(w2) / centre;
    if rho <= 0.01 {
        // Moment expansion of (D + s)^{-t} with s = u2 − u1, the difference of
        // two centred uniforms; the first omitted term is O(ρ^6).
        let (a2, b2) = (w1 * w1, w2 * w2);
        let m2 = (a2 + b2) / 12.0;
        let m4 = a2 * a2 / 80.0 + a2 * b2 / 24.0 + b2 * b2 / 80.0;
        let d2 = centre * centre;
        let c2 = t * (t + 1.0) / 2.0;
        let c4 = c2 * (t + 2.0) * (t + 3.0) / 12.0;
        return w1 * w2 * centre.powf(-t) * (1.0 + c2 * m2 / d2 + c4 * m4 / (d2 * d2));
    }
    let g = |u: f64| if u > 0.0 { u.powf(2.0 - t) } else { 0.0 };
    (g(gap + w1 + w2) + g(gap) - g(gap + w1) - g(gap + w2)) / ((1.0 - t) * (2.0 - t))
}

/// Riesz energy `I_t(μ) = ∬ |x−y|^{-t} dμ(x) dμ(y)` with the line distance
/// on `[0, 1)`, summed exactly over panel pairs.
pub fn energy(bm: &BlockMeasure, t: f64) -> Result<f64> {
    check_energy_exponent(t)?;
    let widths: Vec<f64> = bm.panels.iter().map(|p| p.width().to_f64()).collect();
    let dens: Vec<f64> = bm.panels.iter().map(|p| bm.density(p)).collect();
    let norm = (1.0 - t) * (2.0 - t);
    let rows: Vec<f64> = (0..bm.panels.len())
        .into_par_iter()
        .map(|i| {
            let pi = &bm.panels[i];
            let mut row = dens[i] * dens[i] * 2.0 * widths[i].powf(2.0 - t) / norm;
            let mut cross = 0.0;
            for j in i + 1..bm.panels.len() {
                let gap = (bm.panels[j].start - pi.end).to_f64();
                cross += dens[j] * panel_pair_integral(widths[i], gap, widths[j], t);
            }
            row += 2.0 * dens[i] * cross;
            row
        })
        .collect();
    Ok(stats::pairwise_sum(&rows))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FrostmanReport {
    pub s: f64,
    /// `sup_I μ(I)/|I|^s` over intervals `I ⊂ [0, 1]`.
    pub sup_ratio: f64,
    pub witness: (Fixed, Fixed),
}

/// `sup_I μ(I)/|I|^s`.
///
/// With a piecewise-constant density, `μ([u, v])·|v − u|^{-s}` restricted to
/// one panel in either endpoint is quasi-convex (its derivative changes sign
/// at most once, from − to +), so the supremum is attained with both
/// endpoints at density breakpoints. The scan over breakpoint pairs is exact.
pub fn frostman_exponent(bm: &BlockMeasure, s: f64) -> Result<FrostmanReport> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::param("s", "Frostman exponent must lie in (0, 1]"));
    }
    // Breakpoints with cumulative (unnormalized) mass.
    let mut points: Vec<(Fixed, u128)> = Vec::with_capacity(bm.panels.len() + 1);
    let mut acc: u128 = 0;
    for p in &bm.panels {
        if points.last().is_none_or(|&(x, _)| x != p.start) {
            points.push((p.start, acc));
        }
        acc += p.multiplicity as u128 * p.width().raw();
        points.push((p.end, acc));
    }
    let norm = bm.normalizer as f64;
    let total = acc;
    let rows: Vec<(f64, usize, usize)> = (0..points.len())
        .into_par_iter()
        .map(|i| {
            let (u, mu) = points[i];
            let rest = (total - mu) as f64 / norm;
            let mut best = (0.0, i, i);
            for (j, &(v, mv)) in points.iter().enumerate().skip(i + 1) {
                let len = (v - u).to_f64().powf(s);
                if rest / len <= best.0 {
                    break;
                }
                let r = (mv - mu) as f64 / norm / len;
                if r > best.0 {
                    best = (r, i, j);
                }
            }
            best
        })
        .collect();
    let best = rows
        .into_iter()
        .fold((0.0, 0, 0), |b, r| if r.0 > b.0 { r } else { b });
    Ok(FrostmanReport {
        s,
        sup_ratio: best.0,
        witness: (points[best.1].0, points[best.2].0),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScaleRow {
    pub n: usize,
    /// Grid exponent: `δ = 2^{-k}`.
    pub k: u32,
    pub delta: f64,
    pub count: u128,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DimensionEstimate {
    pub scales: Vec<ScaleRow>,
    /// Least-squares slope of `log count` against `log(1/δ)`.
    pub slope: f64,
    /// `slope` clamped to `[0, 1]`.
    pub dimension: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub residual: f64,
}

/// Dyadic exponent `k` with `2^{-k}` nearest to `(2N)^{-α}` on a log scale.
pub fn block_scale(n: usize, alpha: f64) -> u32 {
    (alpha * ((2 * n) as f64).log2()).round().clamp(1.0, FRAC_BITS as f64) as u32
}

/// Box counts of the truncations `[N, 2N]` at the scale `δ_N ≈ (2N)^{-α}`.
pub fn box_dimension(points: &IndexedPoints, alpha: f64, schedule: &[usize]) -> Result<DimensionEstimate> {
    if !(alpha >= 1.0 && alpha.is_finite()) {
        return Err(Error::param("alpha", "box dimension needs alpha >= 1"));
    }
    if schedule.len() < 3 {
        return Err(Error::param("schedule", "need at least three block sizes"));
    }
    if schedule[0] == 0 || schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("schedule", "must be positive and strictly increasing"));
    }
    let scales = schedule
        .iter()
        .map(|&n| {
            let k = block_scale(n, alpha);
            let t = truncated_set(points, alpha, n, 2 * n)?;
            Ok(ScaleRow {
                n,
                k,
                delta: (-(k as f64)).exp2(),
                count: t.arcs.box_count(k),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = scales.iter().map(|r| r.k as f64 * std::f64::consts::LN_2).collect();
    let ys: Vec<f64> = scales.iter().map(|r| (r.count as f64).ln()).collect();
    let fit = stats::least_squares(&xs, &ys);
    Ok(DimensionEstimate {
        scales,
        slope: fit.slope,
        dimension: fit.slope.clamp(0.0, 1.0),
        intercept: fit.intercept,
        slope_stderr: fit.slope_stderr,
        residual: fit.rms_residual,
    })
}

/// `Σ_{n≥N} (2n^{-α})^s`, the `s`-dimensional cost of covering the limsup
/// set by the balls with index at least `N`.
pub fn cover_sum(alpha: f64, s: f64, n: u64, cutoff: u64) -> Result<Bracket> {
    check_alpha(alpha)?;
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::param("s", "must be positive"));
    }
    if s * alpha <= 1.0 {
        return Err(Error::Divergent(format!(
            "cover sum diverges for s·alpha = {} <= 1",
            s * alpha
        )));
    }
    if n == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    if cutoff < n {
        return Err(Error::param("cutoff", "must be at least n"));
    }
    Ok(stats::power_tail(2f64.powf(s), alpha * s, n, cutoff))
}
