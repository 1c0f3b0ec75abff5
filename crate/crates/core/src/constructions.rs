//! Explicit families without a given pattern, with exact sizes.
//!
//! Every family is described by a [`FamilySpec`], which answers membership
//! and exact size without listing members. [`FamilySpec::materialize`] lists
//! members (in increasing word order) only up to the materialization cap.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::{BigRational, Ratio};
use num_traits::{ToPrimitive, Zero};

use crate::bounds::binomial;
use crate::error::{Error, Result};
use crate::patterns::{forms_pattern, ground_mask, KSubsets, Pattern, SubsetWord, MAX_GROUND};
use crate::walks::{count_walks, strict_level, subset_walk, WalkSpec};

pub const DEFAULT_MATERIALIZATION_CAP: u128 = 1 << 24;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FamilyKind {
    /// Sets whose size mod `2m` lies in `[0, m-1]` (variant 1) or
    /// `[m, 2m-1]` (variant 2).
    Parity { m: usize, variant: u8 },
    /// `k`-sets meeting every block of `n/k` consecutive elements once.
    Transversal { k: usize },
    /// Middle-layer sets with element sum `≡ residue (mod n d)`.
    SumResidue { d: usize, residue: u64 },
    /// Middle-layer sets with element sum in `[center - d²/2, center + d²/2)`.
    SumWindow { d: usize, center: Ratio<i64> },
    /// Middle-layer sets whose walk stays strictly inside `(-d/4, d/4)`.
    BoundedDiscrepancy { d: usize },
    /// `{S ∪ U : U ⊆ T, |U| = ⌊|T|/2⌋}`.
    Cts { s: SubsetWord, t: SubsetWord },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FamilySpec {
    pub n: usize,
    pub kind: FamilyKind,
    pub cap: u128,
}

fn check_ground(n: usize) -> Result<()> {
    if n == 0 || n > MAX_GROUND {
        return Err(Error::InvalidGround(n));
    }
    Ok(())
}

fn check_middle(n: usize) -> Result<()> {
    check_ground(n)?;
    if n % 2 != 0 {
        return Err(Error::param(format!("n = {n} must be even")));
    }
    Ok(())
}

impl FamilySpec {
    fn new(n: usize, kind: FamilyKind) -> Self {
        Self {
            n,
            kind,
            cap: DEFAULT_MATERIALIZATION_CAP,
        }
    }

    pub fn parity(n: usize, m: usize, variant: u8) -> Result<Self> {
        check_ground(n)?;
        if m == 0 || !(1..=2).contains(&variant) {
            return Err(Error::param(format!("parity family needs m >= 1 and variant 1 or 2 (m = {m}, variant = {variant})")));
        }
        Ok(Self::new(n, FamilyKind::Parity { m, variant }))
    }

    pub fn transversal(n: usize, k: usize) -> Result<Self> {
        check_ground(n)?;
        if k == 0 || n % k != 0 {
            return Err(Error::IndivisibleBlocks { n, k });
        }
        Ok(Self::new(n, FamilyKind::Transversal { k }))
    }

    pub fn sum_residue(n: usize, d: usize, residue: u64) -> Result<Self> {
        check_middle(n)?;
        if d == 0 || residue >= (n * d) as u64 {
            return Err(Error::param(format!("residue {residue} outside [0, {})", n * d)));
        }
        Ok(Self::new(n, FamilyKind::SumResidue { d, residue }))
    }

    /// The residue class of largest size (smallest residue among ties),
    /// with that size.
    pub fn best_residue(n: usize, d: usize) -> Result<(Self, BigUint)> {
        check_middle(n)?;
        if d == 0 {
            return Err(Error::param("d must be at least 1"));
        }
        let counts = sum_counts(n, n / 2);
        let modulus = n * d;
        let mut classes = vec![0u128; modulus];
        for (s, c) in counts.iter().enumerate() {
            classes[s % modulus] += c;
        }
        let (residue, size) = classes
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .expect("modulus is positive");
        Ok((Self::sum_residue(n, d, residue as u64)?, BigUint::from(*size)))
    }

    /// A window of width `d²`; `d = 0` gives the empty family.
    pub fn sum_window(n: usize, d: usize, center: Ratio<i64>) -> Result<Self> {
        check_middle(n)?;
        Ok(Self::new(n, FamilyKind::SumWindow { d, center }))
    }

    pub fn bounded_discrepancy(n: usize, d: usize) -> Result<Self> {
        check_middle(n)?;
        if d == 0 {
            return Err(Error::param("d must be at least 1"));
        }
        Ok(Self::new(n, FamilyKind::BoundedDiscrepancy { d }))
    }

    pub fn cts(s: SubsetWord, t: SubsetWord) -> Result<Self> {
        s.check_ground(&t)?;
        if !s.is_disjoint(&t) {
            return Err(Error::OverlappingSupports);
        }
        Ok(Self::new(s.ground(), FamilyKind::Cts { s, t }))
    }

    pub fn with_cap(mut self, cap: u128) -> Self {
        self.cap = cap;
        self
    }

    /// The layer holding every member, if the family is uniform.
    pub fn layer(&self) -> Option<usize> {
        match &self.kind {
            FamilyKind::Parity { .. } => None,
            FamilyKind::Transversal { k } => Some(*k),
            FamilyKind::SumResidue { .. } | FamilyKind::SumWindow { .. } | FamilyKind::BoundedDiscrepancy { .. } => {
                Some(self.n / 2)
            }
            FamilyKind::Cts { s, t } => Some(s.len() + t.len() / 2),
        }
    }

    /// The pattern the construction is certified to avoid. Parity families
    /// avoid every pattern with `|s_+ - s_-| = m`, see [`Self::avoids`].
    pub fn claimed_pattern(&self) -> Option<Pattern> {
        match &self.kind {
            FamilyKind::Transversal { .. } => Some(Pattern::interval(2).expect("d = 2")),
            FamilyKind::SumResidue { d, .. } | FamilyKind::BoundedDiscrepancy { d } => Pattern::interval(*d).ok(),
            FamilyKind::SumWindow { d, .. } if *d > 0 => Pattern::interval(*d).ok(),
            _ => None,
        }
    }

    /// Whether the construction is certified to avoid `p`.
    pub fn avoids(&self, p: &Pattern) -> bool {
        match &self.kind {
            FamilyKind::Parity { m, .. } => p.s_plus().abs_diff(p.s_minus()) == *m,
            _ => self.claimed_pattern().as_ref() == Some(p),
        }
    }

    /// `(lo, hi)` inclusive bounds on the element sum for a window family.
    fn window_sums(d: usize, center: Ratio<i64>) -> Option<(i64, i64)> {
        if d == 0 {
            return None;
        }
        let half = Ratio::new((d * d) as i64, 2);
        let lo = (center - half).ceil().to_integer();
        let hi = (center + half).ceil().to_integer() - 1;
        (lo <= hi).then_some((lo, hi))
    }

    fn discrepancy_level(d: usize) -> Option<i64> {
        strict_level(d as u64, 4).map(|l| l as i64)
    }

    pub fn contains(&self, a: &SubsetWord) -> bool {
        if a.ground() != self.n {
            return false;
        }
        if let Some(k) = self.layer() {
            if a.len() != k {
                return false;
            }
        }
        match &self.kind {
            FamilyKind::Parity { m, variant } => {
                let r = a.len() % (2 * m);
                (r < *m) == (*variant == 1)
            }
            FamilyKind::Transversal { k } => {
                let block = self.n / k;
                (0..*k).all(|i| ((a.bits() >> (i * block)) & ground_mask(block)).count_ones() == 1)
            }
            FamilyKind::SumResidue { d, residue } => a.element_sum() % (self.n * d) as u64 == *residue,
            FamilyKind::SumWindow { d, center } => Self::window_sums(*d, *center)
                .is_some_and(|(lo, hi)| (lo..=hi).contains(&(a.element_sum() as i64))),
            FamilyKind::BoundedDiscrepancy { d } => Self::discrepancy_level(*d)
                .is_some_and(|l| subset_walk(a).iter().all(|w| w.abs() <= l)),
            FamilyKind::Cts { s, t } => {
                s.is_subset_of(a) && (a.bits() & !s.bits() & !t.bits()) == 0
            }
        }
    }

    /// Exact number of members.
    pub fn size(&self) -> BigUint {
        let n = self.n as u64;
        match &self.kind {
            FamilyKind::Parity { m, variant } => (0..=self.n)
                .filter(|j| (j % (2 * m) < *m) == (*variant == 1))
                .map(|j| binomial(n, j as u64))
                .sum(),
            FamilyKind::Transversal { k } => BigUint::from(n / *k as u64).pow(*k as u32),
            FamilyKind::SumResidue { d, residue } => {
                let modulus = self.n * d;
                let total: u128 = sum_counts(self.n, self.n / 2)
                    .iter()
                    .enumerate()
                    .filter(|(s, _)| (s % modulus) as u64 == *residue)
                    .map(|(_, c)| c)
                    .sum();
                BigUint::from(total)
            }
            FamilyKind::SumWindow { d, center } => match Self::window_sums(*d, *center) {
                None => BigUint::zero(),
                Some((lo, hi)) => {
                    let counts = sum_counts(self.n, self.n / 2);
                    let total: u128 = (lo.max(0)..=hi)
                        .filter_map(|s| counts.get(s as usize))
                        .sum();
                    BigUint::from(total)
                }
            },
            FamilyKind::BoundedDiscrepancy { d } => match Self::discrepancy_level(*d) {
                None => BigUint::zero(),
                Some(l) => count_walks(&WalkSpec::symmetric(self.n, 0, 0, l).expect("0 within bounds")),
            },
            FamilyKind::Cts { t, .. } => binomial(t.len() as u64, t.len() as u64 / 2),
        }
    }

    /// `size / C(n, k)` for a uniform family on layer `k`.
    pub fn density(&self) -> Option<BigRational> {
        let k = self.layer()?;
        Some(BigRational::new(
            BigInt::from(self.size()),
            BigInt::from(binomial(self.n as u64, k as u64)),
        ))
    }

    /// All members in increasing word order.
    pub fn materialize(&self) -> Result<Vec<SubsetWord>> {
        let size = self.size();
        let size_u = size.to_u128().unwrap_or(u128::MAX);
        if size_u > self.cap {
            return Err(Error::FamilyTooLarge {
                size: size_u,
                cap: self.cap,
            });
        }
        let n = self.n;
        let words: Vec<u64> = match &self.kind {
            FamilyKind::Parity { .. } => {
                let mut out = Vec::with_capacity(size_u as usize);
                for k in 0..=n {
                    let probe = SubsetWord::from_bits_unchecked(n, ground_mask(k));
                    if self.contains(&probe) {
                        out.extend(KSubsets::new(n, k));
                    }
                }
                out.sort_unstable();
                out
            }
            FamilyKind::Transversal { k } => {
                let block = n / k;
                let mut out = vec![0u64];
                for i in 0..*k {
                    out = out
                        .iter()
                        .flat_map(|w| (0..block).map(move |j| w | 1 << (i * block + j)))
                        .collect();
                }
                out.sort_unstable();
                out
            }
            FamilyKind::Cts { s, t } => {
                let elems: Vec<usize> = t.elements().collect();
                let mut out: Vec<u64> = KSubsets::new(elems.len(), elems.len() / 2)
                    .map(|sub| {
                        crate::patterns::BitIter(sub).fold(s.bits(), |acc, i| acc | 1 << (elems[i] - 1))
                    })
                    .collect();
                out.sort_unstable();
                out
            }
            _ => {
                let k = self.layer().expect("uniform family");
                KSubsets::new(n, k)
                    .filter(|&w| self.contains(&SubsetWord::from_bits_unchecked(n, w)))
                    .collect()
            }
        };
        debug_assert_eq!(words.len() as u128, size_u);
        Ok(words
            .into_iter()
            .map(|w| SubsetWord::from_bits_unchecked(n, w))
            .collect())
    }

    /// Header line of the family text format.
    pub fn header(&self) -> String {
        format!("# family {self}")
    }

    /// Writes the header line and then one member per line.
    pub fn write_family<W: Write>(&self, mut out: W) -> Result<usize> {
        let members = self.materialize()?;
        writeln!(out, "{}", self.header())?;
        for a in &members {
            writeln!(out, "{a}")?;
        }
        Ok(members.len())
    }
}

/// Reads a family file written by [`FamilySpec::write_family`] (or any
/// file with a `# family` header, or `# ground n` for hand-written lists).
pub fn read_family<R: BufRead>(input: R) -> Result<(Option<FamilySpec>, Vec<SubsetWord>)> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .transpose()?
        .ok_or_else(|| Error::param("empty family file"))?;
    let (spec, n) = if let Some(rest) = header.strip_prefix("# family ") {
        let spec: FamilySpec = rest.parse()?;
        let n = spec.n;
        (Some(spec), n)
    } else if let Some(rest) = header.strip_prefix("# ground ") {
        let n = rest.trim().parse().map_err(|_| Error::param(format!("bad header {header:?}")))?;
        (None, n)
    } else {
        return Err(Error::param(format!("missing family header, found {header:?}")));
    };
    let mut members = Vec::new();
    for line in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        members.push(SubsetWord::parse(n, line)?);
    }
    Ok((spec, members))
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.n;
        match &self.kind {
            FamilyKind::Parity { m, variant } => write!(f, "kind=parity n={n} m={m} variant={variant}")?,
            FamilyKind::Transversal { k } => write!(f, "kind=transversal n={n} k={k}")?,
            FamilyKind::SumResidue { d, residue } => write!(f, "kind=sum-residue n={n} d={d} residue={residue}")?,
            FamilyKind::SumWindow { d, center } => write!(f, "kind=sum-window n={n} d={d} center={center}")?,
            FamilyKind::BoundedDiscrepancy { d } => write!(f, "kind=bounded-discrepancy n={n} d={d}")?,
            FamilyKind::Cts { s, t } => write!(f, "kind=cts n={n} S={} T={}", s.to_hex(), t.to_hex())?,
        }
        write!(f, " cap={}", self.cap)
    }
}

impl FromStr for FamilySpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let bad = || Error::param(format!("cannot parse family spec {text:?}"));
        let mut fields = std::collections::HashMap::new();
        for tok in text.split_whitespace() {
            let (k, v) = tok.split_once('=').ok_or_else(bad)?;
            fields.insert(k, v);
        }
        let get = |k: &str| fields.get(k).copied().ok_or_else(bad);
        let num = |k: &str| -> Result<usize> { get(k)?.parse().map_err(|_| bad()) };
        let n = num("n")?;
        let spec = match get("kind")? {
            "parity" => Self::parity(n, num("m")?, num("variant")? as u8)?,
            "transversal" => Self::transversal(n, num("k")?)?,
            "sum-residue" => Self::sum_residue(n, num("d")?, num("residue")? as u64)?,
            "sum-window" => Self::sum_window(n, num("d")?, get("center")?.parse().map_err(|_| bad())?)?,
            "bounded-discrepancy" => Self::bounded_discrepancy(n, num("d")?)?,
            "cts" => Self::cts(SubsetWord::parse(n, get("S")?)?, SubsetWord::parse(n, get("T")?)?)?,
            _ => return Err(bad()),
        };
        Ok(match fields.get("cap") {
            Some(c) => spec.with_cap(c.parse().map_err(|_| bad())?),
            None => spec,
        })
    }
}

/// `counts[s]` = number of `k`-subsets of `[n]` with element sum `s`.
fn sum_counts(n: usize, k: usize) -> Vec<u128> {
    let max = n * (n + 1) / 2;
    // table[j][s]: j-subsets of the elements seen so far with sum s
    let mut table = vec![vec![0u128; max + 1]; k + 1];
    table[0][0] = 1;
    for e in 1..=n {
        for j in (1..=k.min(e)).rev() {
            for s in (e..=max).rev() {
                let add = table[j - 1][s - e];
                if add != 0 {
                    table[j][s] += add;
                }
            }
        }
    }
    std::mem::take(&mut table[k])
}

pub fn element_sum(a: &SubsetWord) -> u64 {
    a.element_sum()
}

pub fn parity_family(n: usize, m: usize, variant: u8) -> Result<Vec<SubsetWord>> {
    FamilySpec::parity(n, m, variant)?.materialize()
}

pub fn transversal_family(n: usize, k: usize) -> Result<Vec<SubsetWord>> {
    FamilySpec::transversal(n, k)?.materialize()
}

pub fn sum_residue_family(n: usize, d: usize, residue: u64) -> Result<Vec<SubsetWord>> {
    FamilySpec::sum_residue(n, d, residue)?.materialize()
}

pub fn sum_window_family(n: usize, d: usize, center: Ratio<i64>) -> Result<Vec<SubsetWord>> {
    FamilySpec::sum_window(n, d, center)?.materialize()
}

pub fn bounded_discrepancy_family(n: usize, d: usize) -> Result<Vec<SubsetWord>> {
    FamilySpec::bounded_discrepancy(n, d)?.materialize()
}

pub fn cts_family(s: SubsetWord, t: SubsetWord) -> Result<Vec<SubsetWord>> {
    FamilySpec::cts(s, t)?.materialize()
}

/// Whether `C_{T,S}` with `|T| = 2d` (here `T = [2d]`, `S = ∅`) contains,
/// for every `d`-balanced pattern, an ordered pair forming it.
pub fn cts_contains_all_patterns(d: usize) -> Result<bool> {
    if d == 0 || 2 * d > MAX_GROUND {
        return Err(Error::param(format!("d = {d} outside 1..=32")));
    }
    let n = 2 * d;
    let family = cts_family(SubsetWord::empty(n)?, SubsetWord::full(n)?)?;
    Ok(Pattern::all_balanced(d).iter().all(|p| {
        family
            .iter()
            .any(|a| family.iter().any(|b| forms_pattern(a.bits(), b.bits(), p)))
    }))
}
