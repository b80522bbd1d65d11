//! Integer sequences `(q_n)` and their exact orbits `{q_n y}`.

use std::collections::HashMap;

use num_bigint::{BigInt, BigUint, Sign};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::dyadic::DyadicNumber;
use crate::error::{Error, Result};
use crate::fixed::Fixed;

/// Generator descriptor, serialized as a tagged JSON object such as
/// `{"kind":"geometric","c":1,"rho":"2","count":8}`.
///
/// `count` is optional in the descriptor; [`generate`] takes the count as an
/// argument and records it in the produced [`IntegerSequence`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SequenceSpec {
    /// `⌊c·ρ^n⌋` with rational `c` and `ρ > 1`, given as strings (`"3/2"`,
    /// `"1.5"`) or integers.
    Geometric {
        #[serde(default = "one_number")]
        c: RationalParam,
        rho: RationalParam,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        count: Option<usize>,
    },
    /// `Σ coeffs[i]·n^i` with integer coefficients.
    Poly {
        coeffs: Vec<i64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        count: Option<usize>,
    },
    /// The numbers `2^i 3^j` in increasing order.
    Smooth23 {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        count: Option<usize>,
    },
    Explicit { terms: Vec<NumberParam> },
}

impl SequenceSpec {
    /// Count stored in the descriptor, if any (explicit lists carry their length).
    pub fn count(&self) -> Option<usize> {
        match self {
            SequenceSpec::Geometric { count, .. }
            | SequenceSpec::Poly { count, .. }
            | SequenceSpec::Smooth23 { count } => *count,
            SequenceSpec::Explicit { terms } => Some(terms.len()),
        }
    }

    pub fn with_count(&self, n: usize) -> SequenceSpec {
        let mut s = self.clone();
        match &mut s {
            SequenceSpec::Geometric { count, .. }
            | SequenceSpec::Poly { count, .. }
            | SequenceSpec::Smooth23 { count } => *count = Some(n),
            SequenceSpec::Explicit { .. } => {}
        }
        s
    }

    pub fn powers_of_two() -> SequenceSpec {
        SequenceSpec::Geometric {
            c: RationalParam::Int(1),
            rho: RationalParam::Int(2),
            count: None,
        }
    }

    pub fn squares() -> SequenceSpec {
        SequenceSpec::Poly {
            coeffs: vec![0, 0, 1],
            count: None,
        }
    }
}

fn one_number() -> RationalParam {
    RationalParam::Int(1)
}

/// A rational parameter accepted either as a JSON integer or as a string
/// (`"7"`, `"3/2"`, `"1.25"`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RationalParam {
    Int(i64),
    Text(String),
}

impl RationalParam {
    pub fn to_rational(&self) -> Result<BigRational> {
        match self {
            RationalParam::Int(v) => Ok(BigRational::from_integer(BigInt::from(*v))),
            RationalParam::Text(s) => parse_rational(s),
        }
    }
}

/// A positive integer given as JSON integer or decimal string (for big terms).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NumberParam {
    Int(u64),
    Text(String),
}

impl NumberParam {
    fn to_biguint(&self) -> Result<BigUint> {
        match self {
            NumberParam::Int(v) => Ok(BigUint::from(*v)),
            NumberParam::Text(s) => s
                .trim()
                .parse()
                .map_err(|_| Error::param("terms", format!("`{s}` is not a non-negative integer"))),
        }
    }
}

pub(crate) fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::param("rho", format!("`{s}` is not a rational number"));
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(p, q));
    }
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if (int_part.is_empty() && frac_part.is_empty())
        || !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return Err(bad());
    }
    let num: BigInt = format!("{int_part}{frac_part}").parse().map_err(|_| bad())?;
    let den = BigInt::from(10u32).pow(frac_part.len() as u32);
    let r = BigRational::new(num, den);
    Ok(if neg { -r } else { r })
}

/// A strictly increasing sequence of positive integers `q_1 < q_2 < …`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegerSequence {
    terms: Vec<BigUint>,
    spec: SequenceSpec,
}

impl IntegerSequence {
    /// Validates and wraps explicit terms.
    pub fn from_terms(terms: Vec<BigUint>) -> Result<Self> {
        check_increasing(&terms)?;
        let spec = SequenceSpec::Explicit {
            terms: terms.iter().map(|t| NumberParam::Text(t.to_string())).collect(),
        };
        Ok(IntegerSequence { terms, spec })
    }

    pub fn terms(&self) -> &[BigUint] {
        &self.terms
    }

    pub fn spec(&self) -> &SequenceSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `q_n` with 1-based indexing.
    pub fn term(&self, n: usize) -> &BigUint {
        &self.terms[n - 1]
    }
}

fn check_increasing(terms: &[BigUint]) -> Result<()> {
    if let Some(first) = terms.first() {
        if first.is_zero() {
            return Err(Error::NotIncreasing { index: 1 });
        }
    }
    for (i, w) in terms.windows(2).enumerate() {
        if w[1] <= w[0] {
            return Err(Error::NotIncreasing { index: i + 2 });
        }
    }
    Ok(())
}

/// Generates the first `count` terms described by `spec`.
///
/// Terms are exact big integers; a generator whose output fails to be
/// strictly increasing (or positive) is rejected with the 1-based index of
/// the first violating term.
pub fn generate(spec: &SequenceSpec, count: usize) -> Result<IntegerSequence> {
    if count == 0 {
        return Err(Error::param("count", "must be at least 1"));
    }
    let terms = match spec {
        SequenceSpec::Smooth23 { .. } => smooth23(count),
        SequenceSpec::Explicit { terms } if terms.len() < count => {
            return Err(Error::param(
                "count",
                format!("explicit list has {} terms, {} requested", terms.len(), count),
            ));
        }
        _ => term_stream(spec)?.take(count).collect::<Result<Vec<_>>>()?,
    };
    check_increasing(&terms)?;
    Ok(IntegerSequence {
        terms,
        spec: spec.with_count(count),
    })
}

type TermStream<'a> = Box<dyn Iterator<Item = Result<BigUint>> + 'a>;

/// Terms `q_1, q_2, …` produced one at a time, without keeping earlier
/// terms around (except for the `2^i 3^j` merge, whose terms are small).
fn term_stream(spec: &SequenceSpec) -> Result<TermStream<'_>> {
    match spec {
        SequenceSpec::Geometric { c, rho, .. } => {
            let c = c.to_rational()?;
            let rho = rho.to_rational()?;
            if rho <= BigRational::one() {
                return Err(Error::param("rho", "ratio must exceed 1"));
            }
            if !c.is_positive() {
                return Err(Error::param("c", "must be positive"));
            }
            let (p, q) = (rho.numer().clone(), rho.denom().clone());
            let mut num = c.numer() * &p;
            let mut den = c.denom() * &q;
            Ok(Box::new(std::iter::from_fn(move || {
                let t = &num / &den;
                num *= &p;
                den *= &q;
                Some(Ok(t.to_biguint().expect("positive")))
            })))
        }
        SequenceSpec::Poly { coeffs, .. } => {
            match coeffs.iter().rposition(|&c| c != 0) {
                Some(lead) if coeffs[lead] > 0 => {}
                _ => return Err(Error::param("coeffs", "leading coefficient must be positive")),
            }
            Ok(Box::new((1usize..).map(move |n| {
                let acc = poly_eval(coeffs, n);
                if acc.sign() != Sign::Plus {
                    return Err(Error::NotIncreasing { index: n });
                }
                Ok(acc.to_biguint().expect("positive"))
            })))
        }
        SequenceSpec::Smooth23 { .. } => {
            let mut all: Vec<BigUint> = Vec::new();
            let mut n = 0usize;
            Ok(Box::new(std::iter::from_fn(move || {
                n += 1;
                if all.len() < n {
                    all = smooth23((2 * n).max(64));
                }
                Some(Ok(all[n - 1].clone()))
            })))
        }
        SequenceSpec::Explicit { terms } => Ok(Box::new(terms.iter().map(NumberParam::to_biguint))),
    }
}

fn poly_eval(coeffs: &[i64], n: usize) -> BigInt {
    let nb = BigInt::from(n);
    let mut acc = BigInt::zero();
    for &c in coeffs.iter().rev() {
        acc = acc * &nb + BigInt::from(c);
    }
    acc
}

/// `q_n` (1-based) computed directly from the descriptor.
pub fn nth_term(spec: &SequenceSpec, n: usize) -> Result<BigUint> {
    if n == 0 {
        return Err(Error::param("n", "indices start at 1"));
    }
    match spec {
        SequenceSpec::Geometric { c, rho, .. } => {
            let c = c.to_rational()?;
            let rho = rho.to_rational()?;
            if rho <= BigRational::one() || !c.is_positive() {
                return Err(Error::param("rho", "ratio must exceed 1 and c be positive"));
            }
            let e = n as u32;
            let t = c.numer() * rho.numer().pow(e) / (c.denom() * rho.denom().pow(e));
            t.to_biguint().ok_or(Error::NotIncreasing { index: n })
        }
        SequenceSpec::Poly { coeffs, .. } => {
            let acc = poly_eval(coeffs, n);
            acc.to_biguint()
                .filter(|t| !t.is_zero())
                .ok_or(Error::NotIncreasing { index: n })
        }
        SequenceSpec::Smooth23 { .. } => Ok(smooth23(n).pop().expect("n >= 1")),
        SequenceSpec::Explicit { terms } => terms
            .get(n - 1)
            .ok_or_else(|| Error::param("n", format!("explicit list has only {} terms", terms.len())))?
            .to_biguint(),
    }
}

/// The `count` smallest numbers of the form `2^i 3^j`, by a two-pointer merge.
fn smooth23(count: usize) -> Vec<BigUint> {
    let mut out = vec![BigUint::one()];
    let (mut i2, mut i3) = (0usize, 0usize);
    while out.len() < count {
        let a = &out[i2] * 2u32;
        let b = &out[i3] * 3u32;
        let next = if a <= b { a.clone() } else { b.clone() };
        if a == next {
            i2 += 1;
        }
        if b == next {
            i3 += 1;
        }
        out.push(next);
    }
    out.truncate(count);
    out
}

/// Result of [`verify_gap_growth`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapReport {
    pub exponent: f64,
    /// `min_{n<m} (q_m − q_n)/(m − n)^e`.
    pub min_ratio: f64,
    /// 1-based indices `(n, m)` attaining the minimum (first in scan order).
    pub witness: (usize, usize),
}

/// Scans all pairs for the smallest normalized gap `(q_m − q_n)/(m−n)^e`.
///
/// For fixed `n` the gap `q_m − q_n` increases with `m` while the
/// normalizer is at most `(len − n)^e`, so the inner scan stops as soon as
/// `q_m − q_n > best · (len − n)^e`; no skipped pair can beat `best`.
pub fn verify_gap_growth(seq: &IntegerSequence, e: f64) -> Result<GapReport> {
    if seq.len() < 2 {
        return Err(Error::param("seq", "need at least two terms"));
    }
    if !(e > 0.0) || !e.is_finite() {
        return Err(Error::param("e", "exponent must be positive"));
    }
    let terms = seq.terms();
    let len = terms.len();
    let mut best = f64::INFINITY;
    let mut witness = (1, 2);
    for n in 0..len - 1 {
        let cap = ((len - 1 - n) as f64).powf(e);
        for m in n + 1..len {
            let gap = big_to_f64(&(&terms[m] - &terms[n]));
            let ratio = gap / ((m - n) as f64).powf(e);
            if ratio < best {
                best = ratio;
                witness = (n + 1, m + 1);
            }
            if gap > best * cap {
                break;
            }
        }
    }
    Ok(GapReport {
        exponent: e,
        min_ratio: best,
        witness,
    })
}

/// `min_n q_{n+1}/q_n` over the available terms; the sequence counts as
/// lacunary (at this finite length) when the result exceeds one.
pub fn lacunarity_ratio(seq: &IntegerSequence) -> Result<f64> {
    if seq.len() < 2 {
        return Err(Error::param("seq", "need at least two terms"));
    }
    Ok(seq
        .terms()
        .windows(2)
        .map(|w| big_ratio(&w[1], &w[0]))
        .fold(f64::INFINITY, f64::min))
}

pub fn is_lacunary(seq: &IntegerSequence) -> Result<bool> {
    Ok(lacunarity_ratio(seq)? > 1.0)
}

pub(crate) fn big_to_f64(x: &BigUint) -> f64 {
    x.to_f64().unwrap_or(f64::INFINITY)
}

/// `a / b` as a float without overflowing on huge operands.
fn big_ratio(a: &BigUint, b: &BigUint) -> f64 {
    let shift = a.bits().max(b.bits()).saturating_sub(60);
    let a = (a >> shift).to_f64().unwrap_or(0.0);
    let b = (b >> shift).to_f64().unwrap_or(0.0);
    if b == 0.0 {
        // b is negligible against a
        f64::INFINITY
    } else {
        a / b
    }
}

/// Enumeration of the difference set `{q_l − q_k : k < l ≤ L}`.
#[derive(Clone, Debug)]
pub struct DifferenceEnumeration {
    /// `(n_j, l_j)`: the distinct differences in order of first appearance,
    /// each with the index `l` at which it first appeared.
    pub entries: Vec<(BigUint, usize)>,
    index: HashMap<BigUint, usize>,
}

impl DifferenceEnumeration {
    /// 1-based position `j` with `n_j = q_l − q_k`.
    pub fn position(&self, diff: &BigUint) -> Option<usize> {
        self.index.get(diff).map(|j| j + 1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The index `j` certifying pair `(k, l)`, 1-based, `k < l`.
    pub fn certificate(&self, seq: &IntegerSequence, k: usize, l: usize) -> Option<usize> {
        if k >= l || l > seq.len() {
            return None;
        }
        self.position(&(seq.term(l) - seq.term(k)))
    }
}

/// Enumerates differences with `l = 2..=L` ascending and `k = l−1..=1`
/// descending, skipping values already seen. Every pair `(k, l)` then has
/// its difference at a position `j ≤ l(l−1)/2`.
pub fn difference_enumeration(seq: &IntegerSequence, limit: usize) -> Result<DifferenceEnumeration> {
    if limit < 2 {
        return Err(Error::param("L", "must be at least 2"));
    }
    if limit > seq.len() {
        return Err(Error::param("L", format!("sequence has only {} terms", seq.len())));
    }
    let mut entries = Vec::new();
    let mut index = HashMap::new();
    for l in 2..=limit {
        for k in (1..l).rev() {
            let d = seq.term(l) - seq.term(k);
            if !index.contains_key(&d) {
                index.insert(d.clone(), entries.len());
                entries.push((d, l));
            }
        }
    }
    Ok(DifferenceEnumeration { entries, index })
}

/// Exact orbit points `x_n = {q_n y}` for `n` in `[start, start + len)`.
#[derive(Clone, Debug, Serialize)]
pub struct OrbitPoints {
    pub start: usize,
    pub points: Vec<DyadicNumber>,
    pub sequence: SequenceSpec,
    pub y: DyadicNumber,
}

impl OrbitPoints {
    pub fn fixed(&self) -> IndexedPoints {
        IndexedPoints {
            start: self.start,
            points: self.points.iter().map(DyadicNumber::to_fixed).collect(),
        }
    }
}

/// Orbit points truncated to the fixed-point grid, keeping their 1-based
/// sequence indices. This is what the arc, discrepancy and dimension
/// operations consume.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IndexedPoints {
    pub start: usize,
    pub points: Vec<Fixed>,
}

impl IndexedPoints {
    /// Points indexed from 1.
    pub fn new(points: Vec<Fixed>) -> Self {
        IndexedPoints { start: 1, points }
    }

    pub fn end(&self) -> usize {
        self.start + self.points.len() - 1
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `x_n`; panics outside the stored range.
    pub fn get(&self, n: usize) -> Fixed {
        self.points[n - self.start]
    }

    pub fn covers(&self, m: usize, n: usize) -> bool {
        !self.points.is_empty() && m >= self.start && n <= self.end() && m <= n
    }

    /// Points `x_m..=x_n` as a slice.
    pub fn range(&self, m: usize, n: usize) -> &[Fixed] {
        &self.points[m - self.start..=n - self.start]
    }
}

/// Precision needed so that `{q y}` keeps 64 correct bits after truncation.
pub fn required_bits(q_max: &BigUint) -> u64 {
    64 + q_max.bits()
}

fn check_orbit_args(seq: &IntegerSequence, y: &DyadicNumber, m: usize, n: usize) -> Result<()> {
    if m == 0 || m > n || n > seq.len() {
        return Err(Error::param(
            "range",
            format!("[{m}..{n}] is not inside 1..={}", seq.len()),
        ));
    }
    let need = required_bits(seq.term(n));
    if y.bits() < need {
        return Err(Error::PrecisionShortfall {
            required: need,
            actual: y.bits(),
        });
    }
    Ok(())
}

/// `x_n = {q_n y}` for `n = m..=n_max`, exactly.
pub fn orbit(seq: &IntegerSequence, y: &DyadicNumber, m: usize, n: usize) -> Result<OrbitPoints> {
    check_orbit_args(seq, y, m, n)?;
    let points = (m..=n).map(|i| y.mul_frac(seq.term(i))).collect();
    Ok(OrbitPoints {
        start: m,
        points,
        sequence: seq.spec().clone(),
        y: y.clone(),
    })
}

/// Same as [`orbit`] truncated straight to fixed point, without keeping the
/// full-precision mantissas around.
pub fn orbit_fixed(seq: &IntegerSequence, y: &DyadicNumber, m: usize, n: usize) -> Result<IndexedPoints> {
    check_orbit_args(seq, y, m, n)?;
    let points = (m..=n).map(|i| y.mul_frac(seq.term(i)).to_fixed()).collect();
    Ok(IndexedPoints { start: m, points })
}

/// `x_n = {q_n y}` for `n = m..=n_max`, streaming the terms from the
/// descriptor instead of materializing the whole sequence. This keeps memory
/// flat for fast-growing sequences such as `2^n` with tens of thousands of
/// terms.
pub fn orbit_from_spec(spec: &SequenceSpec, y: &DyadicNumber, m: usize, n: usize) -> Result<IndexedPoints> {
    if m == 0 || m > n {
        return Err(Error::param("range", format!("[{m}..{n}] is not a valid index range")));
    }
    let need = required_bits(&nth_term(spec, n)?);
    if y.bits() < need {
        return Err(Error::PrecisionShortfall {
            required: need,
            actual: y.bits(),
        });
    }
    let mut points = Vec::with_capacity(n - m + 1);
    let mut prev: Option<BigUint> = None;
    for (i, term) in term_stream(spec)?.take(n).enumerate() {
        let term = term?;
        if term.is_zero() || prev.as_ref().is_some_and(|p| &term <= p) {
            return Err(Error::NotIncreasing { index: i + 1 });
        }
        if i + 1 >= m {
            points.push(y.mul_frac(&term).to_fixed());
        }
        prev = Some(term);
    }
    if points.len() != n - m + 1 {
        return Err(Error::param("range", format!("descriptor has fewer than {n} terms")));
    }
    Ok(IndexedPoints { start: m, points })
}
