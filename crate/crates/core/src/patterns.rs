//! Subsets of `[n]`, difference patterns, and the pattern predicate.
//!
//! Elements are 1-indexed: element `i` of `[n]` lives in bit `i - 1` of the
//! word. Two sets `A != B` form the pattern `pat(A, B)` obtained by walking
//! the symmetric difference in increasing order and writing `+` for elements
//! of `A \ B` and `-` for elements of `B \ A`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Exec};

pub const MAX_GROUND: usize = 64;

/// A subset of `[n]`, `1 <= n <= 64`, stored as one machine word.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubsetWord {
    n: u8,
    bits: u64,
}

#[inline]
pub(crate) fn ground_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

impl SubsetWord {
    pub fn new(n: usize, bits: u64) -> Result<Self> {
        if n == 0 || n > MAX_GROUND {
            return Err(Error::InvalidGround(n));
        }
        if bits & !ground_mask(n) != 0 {
            let element = 64 - bits.leading_zeros() as usize;
            return Err(Error::ElementOutOfRange { element, n });
        }
        Ok(Self { n: n as u8, bits })
    }

    /// Caller guarantees `1 <= n <= 64` and no bit at or above `n`.
    #[inline]
    pub(crate) fn from_bits_unchecked(n: usize, bits: u64) -> Self {
        debug_assert!((1..=MAX_GROUND).contains(&n));
        debug_assert_eq!(bits & !ground_mask(n), 0);
        Self { n: n as u8, bits }
    }

    pub fn empty(n: usize) -> Result<Self> {
        Self::new(n, 0)
    }

    pub fn full(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_GROUND {
            return Err(Error::InvalidGround(n));
        }
        Ok(Self::from_bits_unchecked(n, ground_mask(n)))
    }

    /// Builds a set from 1-indexed elements; repeats are ignored.
    pub fn from_elements(n: usize, elements: &[usize]) -> Result<Self> {
        if n == 0 || n > MAX_GROUND {
            return Err(Error::InvalidGround(n));
        }
        let mut bits = 0u64;
        for &e in elements {
            if e == 0 || e > n {
                return Err(Error::ElementOutOfRange { element: e, n });
            }
            bits |= 1 << (e - 1);
        }
        Ok(Self::from_bits_unchecked(n, bits))
    }

    #[inline]
    pub fn ground(&self) -> usize {
        self.n as usize
    }

    #[inline]
    pub fn bits(&self) -> u64 {
        self.bits
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.bits.count_ones() as usize
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    #[inline]
    pub fn contains(&self, element: usize) -> bool {
        element >= 1 && element <= self.ground() && self.bits >> (element - 1) & 1 == 1
    }

    /// Elements in increasing order.
    pub fn elements(&self) -> impl Iterator<Item = usize> {
        BitIter(self.bits).map(|b| b + 1)
    }

    /// Sum of the elements.
    pub fn element_sum(&self) -> u64 {
        self.elements().map(|e| e as u64).sum()
    }

    pub fn complement(&self) -> Self {
        Self::from_bits_unchecked(self.ground(), !self.bits & ground_mask(self.ground()))
    }

    /// Image under the relabeling `i -> n + 1 - i`.
    pub fn reversed(&self) -> Self {
        let n = self.ground();
        let bits = self.bits.reverse_bits() >> (64 - n);
        Self::from_bits_unchecked(n, bits)
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        self.check_ground(other)?;
        Ok(Self::from_bits_unchecked(self.ground(), self.bits | other.bits))
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.bits & other.bits == 0
    }

    pub fn is_subset_of(&self, other: &Self) -> bool {
        self.bits & !other.bits == 0
    }

    pub(crate) fn check_ground(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::GroundMismatch(self.ground(), other.ground()));
        }
        Ok(())
    }

    /// Parses the element-list form (`"1,3,4"`, `"{}"` or `""` for the empty
    /// set) or the hex form (`"0xd"`).
    pub fn parse(n: usize, text: &str) -> Result<Self> {
        let t = text.trim();
        if let Some(hex) = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
            let bits = u64::from_str_radix(hex, 16).map_err(|_| Error::ParseSet(text.into()))?;
            return Self::new(n, bits);
        }
        let inner = t.trim_start_matches('{').trim_end_matches('}').trim();
        if inner.is_empty() {
            return Self::empty(n);
        }
        let elements = inner
            .split(',')
            .map(|s| s.trim().parse::<usize>().map_err(|_| Error::ParseSet(text.into())))
            .collect::<Result<Vec<_>>>()?;
        Self::from_elements(n, &elements)
    }

    pub fn to_hex(&self) -> String {
        format!("0x{:x}", self.bits)
    }
}

impl fmt::Display for SubsetWord {
    /// Canonical element-list form; the empty set prints as `{}`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("{}");
        }
        let mut first = true;
        for e in self.elements() {
            if !first {
                f.write_str(",")?;
            }
            first = false;
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for SubsetWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{self}}}/{}", self.n)
    }
}

/// Iterator over the positions of set bits, lowest first.
#[derive(Clone, Copy)]
pub(crate) struct BitIter(pub u64);

impl Iterator for BitIter {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let b = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(b)
    }
}

/// Sign of one position of a pattern.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

/// A difference pattern: a word over `{+, -}` of length `1..=64`.
///
/// Bit `i` of `plus` is set iff position `i + 1` carries `+`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Pattern {
    order: u8,
    plus: u64,
}

impl Pattern {
    pub fn from_signs(signs: &[Sign]) -> Result<Self> {
        if signs.is_empty() || signs.len() > 64 {
            return Err(Error::ParsePattern(format!("{} signs", signs.len())));
        }
        let plus = signs
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == Sign::Plus)
            .fold(0u64, |acc, (i, _)| acc | 1 << i);
        Ok(Self {
            order: signs.len() as u8,
            plus,
        })
    }

    #[inline]
    pub(crate) fn from_raw(order: usize, plus: u64) -> Self {
        debug_assert!((1..=64).contains(&order));
        Self {
            order: order as u8,
            plus: plus & ground_mask(order),
        }
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.order as usize
    }

    #[inline]
    pub(crate) fn plus_mask(&self) -> u64 {
        self.plus
    }

    /// Sign at 1-indexed position `i`.
    pub fn sign(&self, i: usize) -> Sign {
        assert!(i >= 1 && i <= self.order(), "position {i} out of range");
        if self.plus >> (i - 1) & 1 == 1 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn signs(&self) -> Vec<Sign> {
        (1..=self.order()).map(|i| self.sign(i)).collect()
    }

    pub fn s_plus(&self) -> usize {
        self.plus.count_ones() as usize
    }

    pub fn s_minus(&self) -> usize {
        self.order() - self.s_plus()
    }

    pub fn is_balanced(&self) -> bool {
        self.s_plus() == self.s_minus()
    }

    /// `d` for a balanced pattern of order `2d`.
    pub fn half_order(&self) -> Option<usize> {
        self.is_balanced().then(|| self.order() / 2)
    }

    pub fn negate(&self) -> Self {
        Self::from_raw(self.order(), !self.plus)
    }

    pub fn reverse(&self) -> Self {
        let t = self.order();
        Self::from_raw(t, self.plus.reverse_bits() >> (64 - t))
    }

    /// Positions `from..=to` (1-indexed) as a new pattern.
    pub fn slice(&self, from: usize, to: usize) -> Option<Self> {
        if from < 1 || to > self.order() || from > to {
            return None;
        }
        let len = to - from + 1;
        Some(Self::from_raw(len, self.plus >> (from - 1)))
    }

    /// Concatenation `self` followed by `other`.
    pub fn concat(&self, other: &Self) -> Option<Self> {
        let t = self.order() + other.order();
        (t <= 64).then(|| Self::from_raw(t, self.plus | other.plus << self.order()))
    }

    /// `IP(d) = +^d -^d`.
    pub fn interval(d: usize) -> Result<Self> {
        if d == 0 || d > 32 {
            return Err(Error::param(format!("interval pattern needs 1 <= d <= 32, got {d}")));
        }
        Ok(Self::from_raw(2 * d, ground_mask(d)))
    }

    /// `ALT(d) = (+-)^d`.
    pub fn alternating(d: usize) -> Result<Self> {
        if d == 0 || d > 32 {
            return Err(Error::param(format!("alternating pattern needs 1 <= d <= 32, got {d}")));
        }
        Ok(Self::from_raw(2 * d, 0x5555_5555_5555_5555))
    }

    /// Every balanced pattern of order `2d`, in increasing order of the
    /// `+`-position mask.
    pub fn all_balanced(d: usize) -> Vec<Self> {
        assert!((1..=16).contains(&d), "d = {d} outside 1..=16");
        KSubsets::new(2 * d, d)
            .map(|plus| Self::from_raw(2 * d, plus))
            .collect()
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.order() {
            f.write_str(if self.plus >> i & 1 == 1 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Pattern({self})")
    }
}

impl FromStr for Pattern {
    type Err = Error;

    /// Accepts `+` and `-` (the Unicode minus sign is also read as `-`).
    fn from_str(s: &str) -> Result<Self> {
        let signs = s
            .trim()
            .chars()
            .map(|c| match c {
                '+' => Ok(Sign::Plus),
                '-' | '\u{2212}' => Ok(Sign::Minus),
                _ => Err(Error::ParsePattern(s.into())),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_signs(&signs).map_err(|_| Error::ParsePattern(s.into()))
    }
}

impl TryFrom<String> for Pattern {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Pattern> for String {
    fn from(p: Pattern) -> String {
        p.to_string()
    }
}

/// Extracts the bits of `word` at the positions set in `mask`, packed to the
/// low end in increasing position order.
#[inline]
pub(crate) fn extract_bits(word: u64, mut mask: u64) -> u64 {
    let mut out = 0u64;
    let mut k = 0;
    while mask != 0 {
        let low = mask & mask.wrapping_neg();
        if word & low != 0 {
            out |= 1 << k;
        }
        k += 1;
        mask ^= low;
    }
    out
}

/// `pat(A, B)` on raw words; `None` when `a == b`.
#[inline]
pub(crate) fn pattern_bits(a: u64, b: u64) -> Option<Pattern> {
    let diff = a ^ b;
    if diff == 0 {
        return None;
    }
    Some(Pattern::from_raw(diff.count_ones() as usize, extract_bits(a, diff)))
}

/// True iff `pat(a, b) == p` (raw words, `a != b` not required).
#[inline]
pub(crate) fn forms_pattern(a: u64, b: u64, p: &Pattern) -> bool {
    let diff = a ^ b;
    diff.count_ones() as usize == p.order() && extract_bits(a, diff) == p.plus_mask()
}

/// The difference pattern formed by the ordered pair `(a, b)`.
pub fn pat(a: &SubsetWord, b: &SubsetWord) -> Result<Pattern> {
    a.check_ground(b)?;
    pattern_bits(a.bits, b.bits).ok_or(Error::EmptyDifference)
}

/// True iff no ordered pair of distinct members forms `p`.
///
/// Brute force over unordered pairs, testing both `p` and its negation.
pub fn is_p_free(family: &[SubsetWord], p: &Pattern) -> Result<bool> {
    is_p_free_with(Exec::default(), family, p)
}

pub fn is_p_free_with(exec: Exec, family: &[SubsetWord], p: &Pattern) -> Result<bool> {
    if let Some(first) = family.first() {
        for s in family {
            first.check_ground(s)?;
        }
    }
    let words: Vec<u64> = family.iter().map(|s| s.bits).collect();
    let q = p.negate();
    Ok(exec::all_range(exec, words.len(), |i| {
        let a = words[i];
        words[i + 1..]
            .iter()
            .all(|&b| !forms_pattern(a, b, p) && !forms_pattern(a, b, &q))
    }))
}

/// Iterator over the `k`-subsets of `[n]` as words, in colex order
/// (increasing numeric value of the word).
#[derive(Clone, Debug)]
pub struct KSubsets {
    next: Option<u64>,
    limit: u64,
}

impl KSubsets {
    pub fn new(n: usize, k: usize) -> Self {
        assert!(n <= 64, "n = {n} exceeds 64");
        if k > n {
            return Self { next: None, limit: 0 };
        }
        Self {
            next: Some(ground_mask(k)),
            limit: ground_mask(n),
        }
    }
}

impl Iterator for KSubsets {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        let cur = self.next?;
        // Gosper's hack.
        self.next = if cur == 0 {
            None
        } else {
            let c = cur & cur.wrapping_neg();
            let r = cur.wrapping_add(c);
            if r == 0 {
                None
            } else {
                let nxt = (((r ^ cur) >> 2) / c) | r;
                (nxt & !self.limit == 0).then_some(nxt)
            }
        };
        Some(cur)
    }
}

/// The `k`-th layer of the `n`-cube in colex order.
pub fn layer(n: usize, k: usize) -> Result<Vec<SubsetWord>> {
    if n == 0 || n > MAX_GROUND {
        return Err(Error::InvalidGround(n));
    }
    Ok(KSubsets::new(n, k)
        .map(|b| SubsetWord::from_bits_unchecked(n, b))
        .collect())
}
