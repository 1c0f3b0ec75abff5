//! Grid domination, combinatorial lines, and the decomposition of a set
//! into singly hit intervals, which turns grid domination into alternating
//! patterns.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;

use crate::bounds::binomial;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::extremal::mis::{self, Budget};
use crate::patterns::{ground_mask, pat, Pattern, SubsetWord};

/// Largest grid handed to [`domination_free_max`] by default (`3^10`).
pub const DEFAULT_GRID_CAP: u64 = 59_049;

/// A point of `[m]^D`, coordinates 1-indexed.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GridVector {
    m: usize,
    coords: Vec<usize>,
}

impl GridVector {
    pub fn new(m: usize, coords: Vec<usize>) -> Result<Self> {
        if m == 0 {
            return Err(Error::param("alphabet size must be at least 1"));
        }
        if let Some(&c) = coords.iter().find(|&&c| c == 0 || c > m) {
            return Err(Error::param(format!("coordinate {c} outside [1, {m}]")));
        }
        Ok(Self { m, coords })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[usize] {
        &self.coords
    }

    /// Position in the lexicographic order of `[m]^D` (last coordinate
    /// fastest).
    pub fn index(&self) -> u64 {
        self.coords
            .iter()
            .fold(0u64, |acc, &c| acc * self.m as u64 + (c - 1) as u64)
    }

    pub fn from_index(m: usize, dim: usize, mut index: u64) -> Self {
        let mut coords = vec![0; dim];
        for c in coords.iter_mut().rev() {
            *c = (index % m as u64) as usize + 1;
            index /= m as u64;
        }
        Self { m, coords }
    }

    pub fn parse(m: usize, text: &str) -> Result<Self> {
        let text = text.trim();
        let coords = if text.is_empty() {
            Vec::new()
        } else {
            text.split(',')
                .map(|t| t.trim().parse().map_err(|_| Error::param(format!("bad coordinate {t:?}"))))
                .collect::<Result<Vec<usize>>>()?
        };
        Self::new(m, coords)
    }
}

impl fmt::Display for GridVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coords.iter().map(|c| c.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

impl fmt::Debug for GridVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({self})")
    }
}

impl FromStr for GridVector {
    type Err = Error;

    /// Parses coordinates, taking the alphabet size to be the largest one.
    fn from_str(text: &str) -> Result<Self> {
        let v = Self::parse(usize::MAX, text)?;
        let m = v.coords.iter().copied().max().unwrap_or(1);
        Self::new(m, v.coords)
    }
}

/// `y` agrees with `x` except in exactly `d` coordinates, where it is larger.
pub fn d_dominates(x: &GridVector, y: &GridVector, d: usize) -> Result<bool> {
    if x.m != y.m || x.dim() != y.dim() {
        return Err(Error::ShapeMismatch);
    }
    let mut differ = 0;
    for (a, b) in x.coords.iter().zip(&y.coords) {
        if a > b {
            return Ok(false);
        }
        differ += usize::from(a != b);
    }
    Ok(differ == d)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DominationFree {
    pub size: usize,
    /// A maximum family when `optimal`.
    pub witness: Vec<GridVector>,
    pub upper_bound: usize,
    pub optimal: bool,
    /// Whether `witness` is the lexicographically smallest maximum family.
    pub canonical: bool,
}

/// `2 m^{D-1}`.
pub fn lemma41_bound(m: usize, dim: usize) -> u128 {
    if dim == 0 {
        return 2;
    }
    2 * (m as u128).pow(dim as u32 - 1)
}

pub fn domination_free_max(m: usize, dim: usize, d: usize) -> Result<DominationFree> {
    domination_free_max_with(m, dim, d, DEFAULT_GRID_CAP, &Budget::default(), Exec::default())
}

/// Largest subset of `[m]^D` with no `d`-dominating pair, by exact
/// independent-set search on the domination graph.
///
/// Panics if the result contradicts `|C| <= 2 m^{D-1}` in the regime
/// `2 m d² <= D`.
pub fn domination_free_max_with(
    m: usize,
    dim: usize,
    d: usize,
    cap: u64,
    budget: &Budget,
    exec: Exec,
) -> Result<DominationFree> {
    let too_large = Error::GridTooLarge { m, dim, cap };
    if m == 0 {
        return Err(Error::param("alphabet size must be at least 1"));
    }
    let size = (m as u64).checked_pow(dim as u32).ok_or(too_large)?;
    if size > cap {
        return Err(Error::GridTooLarge { m, dim, cap });
    }
    let points: Vec<GridVector> = (0..size).map(|i| GridVector::from_index(m, dim, i)).collect();
    let neighbors = domination_graph(&points, d);
    let out = mis::solve_seeded(&neighbors, budget, exec, usize::MAX, &sum_class_seed(&points, m, d));
    let witness: Vec<GridVector> = out.witness.iter().map(|&i| points[i].clone()).collect();
    if out.optimal && 2 * m * d * d <= dim {
        assert!(
            out.size as u128 <= lemma41_bound(m, dim),
            "domination-free family of size {} in [{m}]^{dim} exceeds 2 m^(D-1)",
            out.size
        );
    }
    Ok(DominationFree {
        size: out.size,
        witness,
        upper_bound: out.upper_bound,
        optimal: out.optimal,
        canonical: out.canonical,
    })
}

/// The largest class of `Σ (x_i - 1)` modulo `d(m-1) + 1`. A `d`-dominating
/// pair changes the sum by between `d` and `d(m-1)`, so each class is free.
fn sum_class_seed(points: &[GridVector], m: usize, d: usize) -> Vec<usize> {
    let modulus = d * (m - 1) + 1;
    let mut classes: Vec<Vec<usize>> = vec![Vec::new(); modulus];
    for (i, p) in points.iter().enumerate() {
        let sum: usize = p.coords.iter().map(|c| c - 1).sum();
        classes[sum % modulus].push(i);
    }
    // first class among the largest
    classes.into_iter().rev().max_by_key(Vec::len).unwrap_or_default()
}

/// Adjacency lists of the graph joining `d`-dominating pairs, points given
/// in index order.
fn domination_graph(points: &[GridVector], d: usize) -> Vec<Vec<u32>> {
    let mut adj: Vec<Vec<u32>> = vec![Vec::new(); points.len()];
    let Some(first) = points.first() else {
        return adj;
    };
    let (m, dim) = (first.m, first.dim());
    if d == 0 || d > dim {
        return adj;
    }
    // raise exactly d coordinates of each point
    let mut chosen: Vec<usize> = Vec::with_capacity(d);
    for (i, x) in points.iter().enumerate() {
        for_each_combination(dim, d, &mut chosen, &mut |coords| {
            let mut raised = x.coords.clone();
            raise_all(m, &mut raised, coords, 0, &mut |y| {
                let j = GridVector { m, coords: y.to_vec() }.index() as usize;
                adj[i].push(j as u32);
                adj[j].push(i as u32);
            });
        });
    }
    for l in &mut adj {
        l.sort_unstable();
    }
    adj
}

fn for_each_combination(n: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    if cur.len() == k {
        f(cur);
        return;
    }
    let start = cur.last().map_or(0, |&l| l + 1);
    for i in start..n {
        if n - i < k - cur.len() {
            break;
        }
        cur.push(i);
        for_each_combination(n, k, cur, f);
        cur.pop();
    }
}

fn raise_all(m: usize, y: &mut Vec<usize>, coords: &[usize], at: usize, f: &mut impl FnMut(&[usize])) {
    if at == coords.len() {
        f(y);
        return;
    }
    let c = coords[at];
    let orig = y[c];
    for v in orig + 1..=m {
        y[c] = v;
        raise_all(m, y, coords, at + 1, f);
    }
    y[c] = orig;
}

/// The `m` points agreeing with `z` off `support` (1-indexed coordinates)
/// and constant on it; the values of `z` on `support` are ignored.
pub fn combinatorial_line(support: &[usize], z: &GridVector) -> Result<Vec<GridVector>> {
    if support.is_empty() {
        return Err(Error::param("a line needs a nonempty support"));
    }
    if let Some(&c) = support.iter().find(|&&c| c == 0 || c > z.dim()) {
        return Err(Error::param(format!("coordinate {c} outside [1, {}]", z.dim())));
    }
    Ok((1..=z.m)
        .map(|i| {
            let mut coords = z.coords.clone();
            for &c in support {
                coords[c - 1] = i;
            }
            GridVector { m: z.m, coords }
        })
        .collect())
}

/// Probability that a uniformly random line with a `d`-element support
/// (support and the fixed coordinates both uniform) passes through `v`:
/// `Σ_i C(k_i, d) / (m^{D-d} C(D, d))`, `k_i` the multiplicity of value `i`.
pub fn line_membership_probability(v: &GridVector, d: usize) -> Result<BigRational> {
    let dim = v.dim();
    if d == 0 || d > dim {
        return Err(Error::param(format!("support size {d} outside [1, {dim}]")));
    }
    let mut counts = vec![0u64; v.m + 1];
    for &c in &v.coords {
        counts[c] += 1;
    }
    let num: BigUint = counts.iter().map(|&k| binomial(k, d as u64)).sum();
    let den = BigUint::from(v.m).pow((dim - d) as u32) * binomial(dim as u64, d as u64);
    Ok(BigRational::new(BigInt::from(num), BigInt::from(den)))
}

/// The decomposition of `A ⊆ [n]` with respect to the intervals
/// `I_i = {(i-1)m + 1, ..., im}`: `T` lists the intervals hit exactly once,
/// `x_i` is the position of the hit inside `I_i`, and `B` is the rest of `A`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AltDecomposition {
    pub n: usize,
    pub m: usize,
    /// Increasing 1-indexed interval numbers.
    pub t: Vec<usize>,
    pub b: SubsetWord,
    pub x: GridVector,
}

impl AltDecomposition {
    pub fn intervals(&self) -> usize {
        self.n / self.m
    }
}

fn check_divides(n: usize, m: usize) -> Result<()> {
    if m == 0 || n % m != 0 {
        return Err(Error::IndivisibleGround { n, m });
    }
    Ok(())
}

fn block(a: &SubsetWord, m: usize, i: usize) -> u64 {
    (a.bits() >> ((i - 1) * m)) & ground_mask(m)
}

pub fn alt_decompose(a: &SubsetWord, m: usize) -> Result<AltDecomposition> {
    let n = a.ground();
    check_divides(n, m)?;
    let mut t = Vec::new();
    let mut x = Vec::new();
    let mut b = a.bits();
    for i in 1..=n / m {
        let hit = block(a, m, i);
        if hit.count_ones() == 1 {
            t.push(i);
            x.push(hit.trailing_zeros() as usize + 1);
            b &= !(hit << ((i - 1) * m));
        }
    }
    Ok(AltDecomposition {
        n,
        m,
        t,
        b: SubsetWord::new(n, b)?,
        x: GridVector::new(m, x)?,
    })
}

/// `B(x) = B ∪ {(i-1)m + x_i : i ∈ T}` for the decomposition's own `x`.
pub fn alt_compose(dec: &AltDecomposition) -> Result<SubsetWord> {
    alt_compose_at(dec, &dec.x)
}

/// `B(x)` for another point `x` of `[m]^T`.
pub fn alt_compose_at(dec: &AltDecomposition, x: &GridVector) -> Result<SubsetWord> {
    if x.m != dec.m || x.dim() != dec.t.len() {
        return Err(Error::ShapeMismatch);
    }
    let mut bits = dec.b.bits();
    for (&i, &j) in dec.t.iter().zip(&x.coords) {
        bits |= 1u64 << ((i - 1) * dec.m + j - 1);
    }
    SubsetWord::new(dec.n, bits)
}

/// Checks that `pat(B(x), B(y))` is the alternating pattern of order `2d`
/// when `y` `d`-dominates `x`.
pub fn domination_implies_alt(dec: &AltDecomposition, x: &GridVector, y: &GridVector, d: usize) -> Result<bool> {
    if !d_dominates(x, y, d)? {
        return Err(Error::NotDominating { d });
    }
    let a = alt_compose_at(dec, x)?;
    let b = alt_compose_at(dec, y)?;
    Ok(pat(&a, &b)? == Pattern::alternating(d)?)
}

/// `A` is bad when `|T(A)| <= m K / 2^{m+1}`, `K = n/m`.
pub fn bad_set_indicator(a: &SubsetWord, m: usize) -> Result<bool> {
    let n = a.ground();
    check_divides(n, m)?;
    let hits = (1..=n / m).filter(|&i| block(a, m, i).count_ones() == 1).count() as u128;
    Ok(m < 127 && hits << (m + 1) <= (m * (n / m)) as u128)
}

/// Number of intervals hit exactly once.
pub fn singleton_hits(a: &SubsetWord, m: usize) -> Result<usize> {
    let n = a.ground();
    check_divides(n, m)?;
    Ok((1..=n / m).filter(|&i| block(a, m, i).count_ones() == 1).count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn g(m: usize, c: &[usize]) -> GridVector {
        GridVector::new(m, c.to_vec()).unwrap()
    }

    fn set(n: usize, e: &[usize]) -> SubsetWord {
        SubsetWord::from_elements(n, e).unwrap()
    }

    #[test]
    fn domination_examples() {
        assert!(d_dominates(&g(2, &[1, 1]), &g(2, &[1, 2]), 1).unwrap());
        assert!(!d_dominates(&g(2, &[1, 2]), &g(2, &[2, 1]), 2).unwrap());
        assert!(d_dominates(&g(2, &[1, 1, 1]), &g(2, &[2, 2, 1]), 2).unwrap());
        assert!(matches!(d_dominates(&g(2, &[1]), &g(2, &[1, 1]), 1), Err(Error::ShapeMismatch)));
        assert!(matches!(d_dominates(&g(2, &[1]), &g(3, &[1]), 1), Err(Error::ShapeMismatch)));
    }

    #[test]
    fn domination_free_examples() {
        let r = domination_free_max(2, 4, 1).unwrap();
        assert!(r.optimal);
        assert_eq!(r.size, 8);
        assert!(r.witness.iter().all(|v| v.coords().iter().filter(|&&c| c == 2).count() % 2 == 0));
        assert_eq!(domination_free_max(2, 2, 2).unwrap().size, 3);
        assert_eq!(domination_free_max(3, 1, 1).unwrap().size, 1);
        assert!(matches!(domination_free_max(3, 11, 1), Err(Error::GridTooLarge { .. })));
    }

    #[test]
    fn domination_graph_matches_definition() {
        for (m, dim, d) in [(2, 3, 1), (3, 3, 2), (3, 2, 1), (4, 2, 2)] {
            let pts: Vec<GridVector> = (0..(m as u64).pow(dim as u32))
                .map(|i| GridVector::from_index(m, dim, i))
                .collect();
            let adj = domination_graph(&pts, d);
            for (i, x) in pts.iter().enumerate() {
                for (j, y) in pts.iter().enumerate() {
                    let edge = d_dominates(x, y, d).unwrap() || d_dominates(y, x, d).unwrap();
                    assert_eq!(adj[i].contains(&(j as u32)), edge);
                }
            }
        }
    }

    #[test]
    fn line_examples() {
        let z = g(3, &[1, 2]);
        assert_eq!(
            combinatorial_line(&[1], &z).unwrap(),
            vec![g(3, &[1, 2]), g(3, &[2, 2]), g(3, &[3, 2])]
        );
        assert_eq!(combinatorial_line(&[1], &g(2, &[1])).unwrap(), vec![g(2, &[1]), g(2, &[2])]);
        let line = combinatorial_line(&[1, 3], &g(4, &[1, 2, 1])).unwrap();
        for i in 0..line.len() {
            for j in i + 1..line.len() {
                assert!(d_dominates(&line[i], &line[j], 2).unwrap());
            }
        }
        assert!(combinatorial_line(&[], &z).is_err());
    }

    #[test]
    fn decomposition_examples() {
        let dec = alt_decompose(&set(4, &[1, 3]), 2).unwrap();
        assert_eq!((dec.t.clone(), dec.b, dec.x.clone()), (vec![1, 2], set(4, &[]), g(2, &[1, 1])));
        let dec = alt_decompose(&set(4, &[1, 2, 3]), 2).unwrap();
        assert_eq!((dec.t.clone(), dec.b, dec.x.clone()), (vec![2], set(4, &[1, 2]), g(2, &[1])));
        let dec = alt_decompose(&set(4, &[]), 2).unwrap();
        assert!(dec.t.is_empty() && dec.b.is_empty() && dec.x.dim() == 0);
        assert!(matches!(alt_decompose(&set(5, &[1]), 2), Err(Error::IndivisibleGround { .. })));
    }

    #[test]
    fn domination_gives_alternating_patterns() {
        let dec = alt_decompose(&set(4, &[1, 3]), 2).unwrap();
        assert!(domination_implies_alt(&dec, &g(2, &[1, 1]), &g(2, &[2, 1]), 1).unwrap());
        assert!(domination_implies_alt(&dec, &g(2, &[1, 1]), &g(2, &[2, 2]), 2).unwrap());
        assert!(matches!(
            domination_implies_alt(&dec, &g(2, &[2, 1]), &g(2, &[1, 2]), 2),
            Err(Error::NotDominating { d: 2 })
        ));
    }

    #[test]
    fn bad_sets() {
        assert!(bad_set_indicator(&set(4, &[1, 2]), 2).unwrap());
        assert!(!bad_set_indicator(&set(4, &[1, 3]), 2).unwrap());
    }

    #[test]
    fn line_probability_matches_enumeration() {
        for (m, dim) in [(2, 3), (3, 3), (2, 5), (3, 4)] {
            for d in 1..=dim {
                let lines: Vec<Vec<GridVector>> = (1u64..1 << dim)
                    .filter(|s| s.count_ones() as usize == d)
                    .flat_map(|s| {
                        let support: Vec<usize> = (0..dim).filter(|i| s >> i & 1 == 1).map(|i| i + 1).collect();
                        (0..(m as u64).pow(dim as u32))
                            .map(|zi| GridVector::from_index(m, dim, zi))
                            .filter(|z| support.iter().all(|&c| z.coords[c - 1] == 1))
                            .map(|z| combinatorial_line(&support, &z).unwrap())
                            .collect::<Vec<_>>()
                    })
                    .collect();
                for vi in 0..(m as u64).pow(dim as u32) {
                    let v = GridVector::from_index(m, dim, vi);
                    let hits = lines.iter().filter(|l| l.contains(&v)).count();
                    let expect = BigRational::new(hits.into(), lines.len().into());
                    assert_eq!(line_membership_probability(&v, d).unwrap(), expect);
                }
            }
        }
    }

    #[test]
    fn grid_text_round_trip() {
        let v = g(3, &[1, 3, 2]);
        assert_eq!(v.to_string(), "1,3,2");
        assert_eq!(GridVector::parse(3, "1,3,2").unwrap(), v);
        assert_eq!("1,3,2".parse::<GridVector>().unwrap(), v);
        assert!(GridVector::parse(2, "1,3").is_err());
        assert_eq!(GridVector::from_index(3, 3, v.index()), v);
    }

    proptest! {
        #[test]
        fn decomposition_round_trips(bits in 0u64..1 << 12, m in prop::sample::select(vec![1usize, 2, 3, 4, 6])) {
            let a = SubsetWord::new(12, bits).unwrap();
            let dec = alt_decompose(&a, m).unwrap();
            prop_assert_eq!(alt_compose(&dec).unwrap(), a);
        }

        #[test]
        fn random_dominating_pairs_give_alt(bits in 0u64..1 << 8, seed in any::<u64>()) {
            let a = SubsetWord::new(8, bits).unwrap();
            let dec = alt_decompose(&a, 2).unwrap();
            let dim = dec.t.len();
            prop_assume!(dim > 0);
            // x all ones, y raised on a seed-chosen nonempty subset of coordinates
            let raise: Vec<usize> = (0..dim).filter(|i| seed >> i & 1 == 1).collect();
            prop_assume!(!raise.is_empty());
            let x = GridVector::new(2, vec![1; dim]).unwrap();
            let mut yc = vec![1; dim];
            for &i in &raise {
                yc[i] = 2;
            }
            let y = GridVector::new(2, yc).unwrap();
            prop_assert!(domination_implies_alt(&dec, &x, &y, raise.len()).unwrap());
        }
    }
}
