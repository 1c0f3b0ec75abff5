//! Exact counting of ±1 lattice walks between barriers.
//!
//! A set `A ⊆ [n]` corresponds to the walk `W_i = |A ∩ [i]| - |[i] \ A|`,
//! so balanced walks of length `n` are the sets of the middle layer.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::patterns::SubsetWord;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct WalkSpec {
    pub length: usize,
    pub start: i64,
    pub end: i64,
    /// Lowest admissible level, inclusive; `None` is unbounded.
    pub lo: Option<i64>,
    /// Highest admissible level, inclusive; `None` is unbounded.
    pub hi: Option<i64>,
}

impl WalkSpec {
    pub fn unbounded(length: usize, start: i64, end: i64) -> Self {
        Self {
            length,
            start,
            end,
            lo: None,
            hi: None,
        }
    }

    pub fn bounded(length: usize, start: i64, end: i64, lo: i64, hi: i64) -> Result<Self> {
        let spec = Self {
            length,
            start,
            end,
            lo: Some(lo),
            hi: Some(hi),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Walks confined to `[-bound, bound]`.
    pub fn symmetric(length: usize, start: i64, end: i64, bound: i64) -> Result<Self> {
        Self::bounded(length, start, end, -bound, bound)
    }

    pub fn validate(&self) -> Result<()> {
        let lo = self.lo.unwrap_or(i64::MIN);
        let hi = self.hi.unwrap_or(i64::MAX);
        if lo > hi {
            return Err(Error::param(format!("empty level range [{lo}, {hi}]")));
        }
        for x in [self.start, self.end] {
            if x < lo || x > hi {
                return Err(Error::param(format!("endpoint {x} outside [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    fn with_hi(mut self, hi: i64) -> Self {
        self.hi = Some(self.hi.map_or(hi, |h| h.min(hi)));
        self
    }

    fn with_lo(mut self, lo: i64) -> Self {
        self.lo = Some(self.lo.map_or(lo, |l| l.max(lo)));
        self
    }
}

/// Number of walks matching `spec`, by dynamic programming over
/// (step, level). Zero when the endpoints are unreachable or lie outside
/// the barriers.
pub fn count_walks(spec: &WalkSpec) -> BigUint {
    let len = spec.length as i64;
    // levels reachable at all lie within `len` of the start
    let lo = spec.lo.map_or(spec.start - len, |l| l.max(spec.start - len));
    let hi = spec.hi.map_or(spec.start + len, |h| h.min(spec.start + len));
    if spec.start < lo || spec.start > hi || spec.end < lo || spec.end > hi {
        return BigUint::zero();
    }
    if (spec.end - spec.start).abs() > len || (len - (spec.end - spec.start)).rem_euclid(2) != 0 {
        return BigUint::zero();
    }
    let width = (hi - lo + 1) as usize;
    let mut cur = vec![BigUint::zero(); width];
    cur[(spec.start - lo) as usize] = BigUint::one();
    let mut next = vec![BigUint::zero(); width];
    for _ in 0..spec.length {
        for (i, slot) in next.iter_mut().enumerate() {
            let mut v = BigUint::zero();
            if i > 0 {
                v += &cur[i - 1];
            }
            if i + 1 < width {
                v += &cur[i + 1];
            }
            *slot = v;
        }
        std::mem::swap(&mut cur, &mut next);
    }
    std::mem::take(&mut cur[(spec.end - lo) as usize])
}

/// Walks matching `spec` that visit level `h`.
pub fn count_walks_hitting(spec: &WalkSpec, h: i64) -> BigUint {
    let all = count_walks(spec);
    let avoiding = if h > spec.start.max(spec.end) {
        count_walks(&spec.with_hi(h - 1))
    } else if h < spec.start.min(spec.end) {
        count_walks(&spec.with_lo(h + 1))
    } else {
        BigUint::zero()
    };
    all - avoiding
}

/// Reflection principle for an unbounded `spec` and a barrier `h` beyond
/// both endpoints: walks `a -> b` touching `h` are as many as unrestricted
/// walks `a -> 2h - b`.
pub fn reflection_identity_check(spec: &WalkSpec, h: i64) -> Result<bool> {
    if h <= spec.start.max(spec.end) && h >= spec.start.min(spec.end) {
        return Err(Error::param(format!(
            "barrier {h} lies between the endpoints {} and {}",
            spec.start, spec.end
        )));
    }
    let free = WalkSpec::unbounded(spec.length, spec.start, spec.end);
    let reflected = WalkSpec::unbounded(spec.length, spec.start, 2 * h - spec.end);
    Ok(count_walks_hitting(&free, h) == count_walks(&reflected))
}

/// Probability that a uniform walk `a -> b` of length `length` stays in
/// `[-bound, bound]`.
pub fn segment_excursion_probability(length: usize, a: i64, b: i64, bound: i64) -> Result<BigRational> {
    let inside = WalkSpec::symmetric(length, a, b, bound)?;
    let total = count_walks(&WalkSpec::unbounded(length, a, b));
    if total.is_zero() {
        return Err(Error::ZeroDenominator);
    }
    Ok(BigRational::new(
        BigInt::from(count_walks(&inside)),
        BigInt::from(total),
    ))
}

/// Largest integer strictly below `num / den`; `None` when there is none
/// among the nonnegative integers. Realizes a strict barrier `|W| < num/den`
/// as the inclusive level bound `|W| <= strict_level(num, den)`.
pub fn strict_level(num: u64, den: u64) -> Option<u64> {
    assert!(den > 0, "zero denominator");
    (num > 0).then(|| (num - 1) / den)
}

/// The walk of a set: entry `i` is `|A ∩ [i]| - |[i] \ A|`, starting from 0.
pub fn subset_walk(a: &SubsetWord) -> Vec<i64> {
    let mut out = Vec::with_capacity(a.ground() + 1);
    let mut level = 0;
    out.push(0);
    for i in 1..=a.ground() {
        level += if a.contains(i) { 1 } else { -1 };
        out.push(level);
    }
    out
}
