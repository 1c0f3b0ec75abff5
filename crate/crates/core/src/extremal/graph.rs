use crate::bounds::binomial_u128;
use crate::error::{Error, Result};
use crate::patterns::{forms_pattern, ground_mask, KSubsets, Pattern, SubsetWord, MAX_GROUND};

pub const DEFAULT_VERTEX_CAP: usize = 300_000;

/// Conflict graph on the `k`-th layer of the `n`-cube: `{A, B}` is an edge
/// iff `pat(A, B)` is `P` or its negation, so independent sets are exactly
/// the `P`-free subfamilies of the layer.
///
/// Vertices are the `k`-subsets in colex order. Adjacency is kept as sorted
/// neighbor lists; [`ConflictGraph::adjacency_row`] expands one vertex to a
/// bit-vector over vertex indices.
#[derive(Clone, Debug)]
pub struct ConflictGraph {
    n: usize,
    k: usize,
    pattern: Pattern,
    vertices: Vec<SubsetWord>,
    neighbors: Vec<Vec<u32>>,
    edge_count: usize,
}

/// Colex rank of a `k`-subset word among all `k`-subsets.
pub(crate) struct ColexRanker {
    // binom[i][j] = C(i, j) for i <= 64, j <= 64
    binom: Vec<[u64; 65]>,
}

impl ColexRanker {
    pub(crate) fn new() -> Self {
        let mut binom = vec![[0u64; 65]; 65];
        for i in 0..=64 {
            binom[i][0] = 1;
            for j in 1..=i {
                binom[i][j] = binom[i - 1][j - 1].saturating_add(binom[i - 1][j]);
            }
        }
        Self { binom }
    }

    #[inline]
    pub(crate) fn rank(&self, word: u64) -> usize {
        let mut rank = 0u64;
        let mut w = word;
        let mut j = 1;
        while w != 0 {
            let b = w.trailing_zeros() as usize;
            rank += self.binom[b][j];
            j += 1;
            w &= w - 1;
        }
        rank as usize
    }
}

impl ConflictGraph {
    pub fn build(n: usize, k: usize, pattern: &Pattern) -> Result<Self> {
        Self::build_with_cap(n, k, pattern, DEFAULT_VERTEX_CAP)
    }

    pub fn build_with_cap(n: usize, k: usize, pattern: &Pattern, cap: usize) -> Result<Self> {
        if n == 0 || n > MAX_GROUND {
            return Err(Error::InvalidGround(n));
        }
        if k > n {
            return Err(Error::param(format!("layer {k} above ground size {n}")));
        }
        let d = pattern
            .half_order()
            .ok_or_else(|| Error::UnbalancedPattern(pattern.to_string()))?;
        let size = binomial_u128(n as u64, k as u64);
        if size > cap as u128 {
            return Err(Error::LayerTooLarge { n, k, size, cap });
        }

        let vertices: Vec<SubsetWord> = KSubsets::new(n, k)
            .map(|b| SubsetWord::from_bits_unchecked(n, b))
            .collect();
        let mut neighbors = vec![Vec::new(); vertices.len()];
        let mut edge_count = 0;
        if d <= k && d <= n - k {
            let ranker = ColexRanker::new();
            let negated = pattern.negate();
            let full = ground_mask(n);
            for (u, a) in vertices.iter().enumerate() {
                let a = a.bits();
                let outside = full & !a;
                let list = &mut neighbors[u];
                for removed in SubWords::new(a, d) {
                    for added in SubWords::new(outside, d) {
                        let b = (a & !removed) | added;
                        if forms_pattern(a, b, pattern) || forms_pattern(a, b, &negated) {
                            list.push(ranker.rank(b) as u32);
                        }
                    }
                }
                list.sort_unstable();
                edge_count += list.len();
            }
            edge_count /= 2;
        }
        Ok(Self {
            n,
            k,
            pattern: *pattern,
            vertices,
            neighbors,
            edge_count,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn pattern(&self) -> &Pattern {
        &self.pattern
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn vertices(&self) -> &[SubsetWord] {
        &self.vertices
    }

    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.neighbors[v]
    }

    pub(crate) fn neighbor_lists(&self) -> &[Vec<u32>] {
        &self.neighbors
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors[u].binary_search(&(v as u32)).is_ok()
    }

    /// Bit-vector over vertex indices of the neighbors of `v`.
    pub fn adjacency_row(&self, v: usize) -> Vec<u64> {
        let mut row = vec![0u64; self.vertices.len().div_ceil(64)];
        for &u in &self.neighbors[v] {
            row[u as usize / 64] |= 1 << (u % 64);
        }
        row
    }

    pub fn index_of(&self, set: &SubsetWord) -> Option<usize> {
        if set.ground() != self.n || set.len() != self.k {
            return None;
        }
        self.vertices.binary_search(set).ok()
    }
}

/// The `d`-element sub-words of a word, as words.
struct SubWords {
    positions: Vec<u64>,
    inner: KSubsets,
}

impl SubWords {
    fn new(word: u64, d: usize) -> Self {
        let positions: Vec<u64> = crate::patterns::BitIter(word).map(|b| 1u64 << b).collect();
        let inner = KSubsets::new(positions.len(), d);
        Self { positions, inner }
    }
}

impl Iterator for SubWords {
    type Item = u64;

    fn next(&mut self) -> Option<u64> {
        let pick = self.inner.next()?;
        Some(
            crate::patterns::BitIter(pick)
                .map(|i| self.positions[i])
                .fold(0, |acc, bit| acc | bit),
        )
    }
}
