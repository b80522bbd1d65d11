//! Finite unions of arcs on the circle ℝ/ℤ.
//!
//! Arcs are half-open `[a, b)` with fixed-point endpoints; an arc crossing 0
//! is stored as the two pieces `[a, 1)` and `[0, b)`. All measures are exact.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixed::{Fixed, FRAC_BITS};

/// A half-open interval `[start, end)` with `0 ≤ start < end ≤ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Arc {
    pub start: Fixed,
    pub end: Fixed,
}

impl Arc {
    pub fn len(&self) -> Fixed {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

/// Sorted, pairwise disjoint, non-touching arcs with their total measure.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ArcUnion {
    arcs: Vec<Arc>,
    total: Fixed,
}

/// The pieces of the ball `B(center, radius)` on the circle (one piece, or
/// two when it wraps through 0, or the full circle when `radius ≥ 1/2`).
pub fn ball_pieces(center: Fixed, radius: Fixed) -> ([Option<Arc>; 2], Fixed) {
    if radius >= Fixed::HALF {
        let full = Arc {
            start: Fixed::ZERO,
            end: Fixed::ONE,
        };
        return ([Some(full), None], Fixed::ONE);
    }
    if radius == Fixed::ZERO {
        return ([None, None], Fixed::ZERO);
    }
    let c = center.wrap();
    let a = c.sub_mod1(radius);
    let b = c.add_mod1(radius);
    let len = radius + radius;
    if a < b {
        ([Some(Arc { start: a, end: b }), None], len)
    } else {
        let hi = Arc {
            start: a,
            end: Fixed::ONE,
        };
        let lo = (b > Fixed::ZERO).then_some(Arc {
            start: Fixed::ZERO,
            end: b,
        });
        ([lo, Some(hi)], len)
    }
}

impl ArcUnion {
    pub fn empty() -> Self {
        ArcUnion::default()
    }

    pub fn full() -> Self {
        ArcUnion::normalize(vec![Arc {
            start: Fixed::ZERO,
            end: Fixed::ONE,
        }])
    }

    /// Normalizes arbitrary arcs (within `[0, 1]`) into a union: sort, then
    /// merge overlapping or touching neighbours.
    pub fn normalize(mut arcs: Vec<Arc>) -> Self {
        arcs.retain(|a| !a.is_empty());
        arcs.sort_unstable();
        let mut out: Vec<Arc> = Vec::with_capacity(arcs.len());
        for a in arcs {
            match out.last_mut() {
                Some(last) if a.start <= last.end => {
                    if a.end > last.end {
                        last.end = a.end;
                    }
                }
                _ => out.push(a),
            }
        }
        let total = out.iter().fold(Fixed::ZERO, |acc, a| acc + a.len());
        ArcUnion { arcs: out, total }
    }

    /// Validates and normalizes a list of `[a, b)` pairs on the circle.
    /// Pairs with `a > b` are read as arcs wrapping through 0.
    pub fn from_pairs(pairs: &[(Fixed, Fixed)]) -> Result<Self> {
        let mut arcs = Vec::with_capacity(pairs.len());
        for &(a, b) in pairs {
            if a > Fixed::ONE || b > Fixed::ONE {
                return Err(Error::param("arcs", "endpoints must lie in [0, 1]"));
            }
            if a <= b {
                arcs.push(Arc { start: a, end: b });
            } else {
                arcs.push(Arc {
                    start: a,
                    end: Fixed::ONE,
                });
                arcs.push(Arc {
                    start: Fixed::ZERO,
                    end: b,
                });
            }
        }
        Ok(ArcUnion::normalize(arcs))
    }

    /// Union of the balls `B(c_i, r_i)` on the circle.
    pub fn from_balls(centers: &[Fixed], radii: &[Fixed]) -> Result<Self> {
        if centers.len() != radii.len() {
            return Err(Error::param("radii", "one radius per center required"));
        }
        let mut arcs = Vec::with_capacity(centers.len() + 1);
        for (&c, &r) in centers.iter().zip(radii) {
            let (pieces, _) = ball_pieces(c, r);
            arcs.extend(pieces.into_iter().flatten());
        }
        Ok(ArcUnion::normalize(arcs))
    }

    pub fn from_ball(center: Fixed, radius: Fixed) -> Self {
        let (pieces, _) = ball_pieces(center, radius);
        ArcUnion::normalize(pieces.into_iter().flatten().collect())
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn is_empty(&self) -> bool {
        self.arcs.is_empty()
    }

    /// Exact Lebesgue measure.
    pub fn measure(&self) -> Fixed {
        self.total
    }

    pub fn union(&self, other: &ArcUnion) -> ArcUnion {
        let mut all = self.arcs.clone();
        all.extend_from_slice(&other.arcs);
        ArcUnion::normalize(all)
    }

    /// Intersection by a merge sweep over the two sorted arc lists.
    pub fn intersection(&self, other: &ArcUnion) -> ArcUnion {
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < self.arcs.len() && j < other.arcs.len() {
            let a = self.arcs[i];
            let b = other.arcs[j];
            let lo = a.start.max(b.start);
            let hi = a.end.min(b.end);
            if lo < hi {
                out.push(Arc { start: lo, end: hi });
            }
            if a.end <= b.end {
                i += 1;
            } else {
                j += 1;
            }
        }
        ArcUnion::normalize(out)
    }

    pub fn intersect_measure(&self, other: &ArcUnion) -> Fixed {
        let (mut i, mut j) = (0, 0);
        let mut total = Fixed::ZERO;
        while i < self.arcs.len() && j < other.arcs.len() {
            let a = self.arcs[i];
            let b = other.arcs[j];
            let lo = a.start.max(b.start);
            let hi = a.end.min(b.end);
            if lo < hi {
                total = total + (hi - lo);
            }
            if a.end <= b.end {
                i += 1;
            } else {
                j += 1;
            }
        }
        total
    }

    /// Membership of a point of `[0, 1)` (binary search, half-open arcs).
    pub fn contains(&self, x: Fixed) -> bool {
        let x = x.wrap();
        let idx = self.arcs.partition_point(|a| a.start <= x);
        idx > 0 && x < self.arcs[idx - 1].end
    }

    /// Number of grid cells `[jδ, (j+1)δ)` with `δ = 2^{-k}` meeting the union.
    pub fn box_count(&self, k: u32) -> u128 {
        assert!(k <= FRAC_BITS, "grid scale 2^-{k} below resolution");
        let mut count = 0u128;
        let mut last_cell: Option<u128> = None;
        for a in &self.arcs {
            let first = a.start.cell(k);
            let last = Fixed::from_raw(a.end.raw() - 1).cell(k);
            let first = match last_cell {
                Some(prev) if prev >= first => prev + 1,
                _ => first,
            };
            if last >= first {
                count += last - first + 1;
            }
            last_cell = Some(last_cell.map_or(last, |p| p.max(last)));
        }
        count
    }

    /// Endpoint pairs as exact decimal strings.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.arcs
                .iter()
                .map(|a| {
                    serde_json::json!([a.start.to_decimal_string(), a.end.to_decimal_string()])
                })
                .collect(),
        )
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let pairs: Vec<(Fixed, Fixed)> = serde_json::from_value(v.clone())?;
        ArcUnion::from_pairs(&pairs)
    }
}

impl Serialize for ArcUnion {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ArcUnion {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        ArcUnion::from_json(&v).map_err(serde::de::Error::custom)
    }
}

/// Exact `λ(B(a, r) ∩ B(b, s))` for two balls on the circle.
///
/// For radii below one half the intersection consists of the overlaps on
/// the two sides of the circle, at distances `d = ‖a − b‖` and `1 − d`.
pub fn ball_intersection(a: Fixed, r: Fixed, b: Fixed, s: Fixed) -> Fixed {
    if r >= Fixed::HALF {
        return ball_len(s);
    }
    if s >= Fixed::HALF {
        return ball_len(r);
    }
    let d = a.wrap().circle_dist(b.wrap());
    let cap = r.min(s) + r.min(s);
    let reach = r + s;
    let near = reach.saturating_sub(d).min(cap);
    let far = reach.saturating_sub(Fixed::ONE - d).min(cap);
    (near + far).min(cap)
}

/// `λ(B(·, r))`.
pub fn ball_len(r: Fixed) -> Fixed {
    if r >= Fixed::HALF {
        Fixed::ONE
    } else {
        r + r
    }
}
