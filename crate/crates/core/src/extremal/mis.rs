//! Exact maximum independent set by branch and bound.
//!
//! The search runs as a maximum-clique search on the complement graph with
//! bit-parallel candidate sets and greedy-coloring upper bounds. Root
//! branches are independent and run through [`crate::exec`]; they share only
//! the incumbent size, so the optimum does not depend on the thread count.
//!
//! Once the optimum `f` is known, the reported witness is the
//! lexicographically smallest maximum independent set (vertex indices
//! compared in increasing order). It is built element by element with
//! decision searches, which makes it independent of how the optimum was
//! found.
//!
//! Before any branching, a lexicographic greedy set and a first-fit clique
//! cover bound the optimum from both sides; when they meet the search is
//! skipped entirely. This closes large sparse instances (up to hundreds of
//! thousands of vertices) that the dense search cannot hold in memory.

use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use crate::exec::{self, Exec};

/// Largest graph handed to the dense bit-parallel search.
pub const DENSE_VERTEX_LIMIT: usize = 16_384;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Budget {
    pub max_nodes: u64,
    pub max_time: Option<Duration>,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            max_nodes: 100_000_000,
            max_time: Some(Duration::from_secs(300)),
        }
    }
}

impl Budget {
    pub fn unlimited() -> Self {
        Self {
            max_nodes: u64::MAX,
            max_time: None,
        }
    }

    pub fn nodes(max_nodes: u64) -> Self {
        Self {
            max_nodes,
            max_time: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MisOutcome {
    /// Size of the best independent set found.
    pub size: usize,
    /// Sorted vertex indices of the best set found.
    pub witness: Vec<usize>,
    /// Certified upper bound on the independence number.
    pub upper_bound: usize,
    pub optimal: bool,
    /// Whether `witness` is the lexicographically smallest maximum set.
    pub canonical: bool,
    pub nodes: u64,
    pub elapsed: Duration,
}

/// Greedy independent set taking the lowest admissible index each time.
pub fn greedy_lex(neighbors: &[Vec<u32>]) -> Vec<usize> {
    let mut blocked = vec![false; neighbors.len()];
    let mut set = Vec::new();
    for v in 0..neighbors.len() {
        if blocked[v] {
            continue;
        }
        set.push(v);
        for &u in &neighbors[v] {
            blocked[u as usize] = true;
        }
    }
    set
}

/// First-fit partition of the vertices into cliques, scanning in index
/// order. Returns the clique id of every vertex and the number of cliques,
/// which bounds the independence number from above.
pub fn clique_cover(neighbors: &[Vec<u32>]) -> (Vec<usize>, usize) {
    let mut clique_of = vec![usize::MAX; neighbors.len()];
    let mut sizes: Vec<usize> = Vec::new();
    let mut hits: HashMap<usize, usize> = HashMap::new();
    for v in 0..neighbors.len() {
        hits.clear();
        for &u in &neighbors[v] {
            let c = clique_of[u as usize];
            if c != usize::MAX {
                *hits.entry(c).or_insert(0) += 1;
            }
        }
        let join = hits
            .iter()
            .filter(|(c, count)| sizes[**c] == **count)
            .map(|(c, _)| *c)
            .min();
        match join {
            Some(c) => {
                clique_of[v] = c;
                sizes[c] += 1;
            }
            None => {
                clique_of[v] = sizes.len();
                sizes.push(1);
            }
        }
    }
    (clique_of, sizes.len())
}

pub fn solve(neighbors: &[Vec<u32>], budget: &Budget, exec: Exec) -> MisOutcome {
    solve_bounded(neighbors, budget, exec, usize::MAX)
}

/// [`solve`] with an externally certified upper bound on the independence
/// number. A greedy set reaching the bound is optimal, and the lexicographic
/// greedy set is the smallest independent set of its size, so it is also
/// the canonical witness.
pub fn solve_bounded(neighbors: &[Vec<u32>], budget: &Budget, exec: Exec, upper: usize) -> MisOutcome {
    solve_seeded(neighbors, budget, exec, upper, &[])
}

fn is_independent(neighbors: &[Vec<u32>], set: &[usize]) -> bool {
    let mut member = vec![false; neighbors.len()];
    for &v in set {
        if v >= neighbors.len() || member[v] {
            return false;
        }
        member[v] = true;
    }
    set.iter().all(|&v| neighbors[v].iter().all(|&u| !member[u as usize]))
}

/// [`solve_bounded`] starting from a known independent set `seed` when it
/// beats the greedy one. A seed reaching the upper bound settles the
/// instance without search, but its witness is then not canonical.
pub fn solve_seeded(neighbors: &[Vec<u32>], budget: &Budget, exec: Exec, upper: usize, seed: &[usize]) -> MisOutcome {
    let start = Instant::now();
    let n = neighbors.len();
    let greedy = greedy_lex(neighbors);
    let (_, cover) = clique_cover(neighbors);
    let cover = cover.min(upper);
    if greedy.len() == cover {
        return MisOutcome {
            size: greedy.len(),
            witness: greedy,
            upper_bound: cover,
            optimal: true,
            canonical: true,
            nodes: 0,
            elapsed: start.elapsed(),
        };
    }
    let seeded = seed.len() > greedy.len() && {
        let ok = is_independent(neighbors, seed);
        if !ok {
            log::warn!("ignoring a seed that is not independent");
        }
        ok
    };
    let incumbent = if seeded {
        let mut s = seed.to_vec();
        s.sort_unstable();
        s
    } else {
        greedy.clone()
    };
    if incumbent.len() == cover || n > DENSE_VERTEX_LIMIT {
        if incumbent.len() < cover {
            log::warn!("graph with {n} vertices exceeds the dense search limit; returning bounds only");
        }
        return MisOutcome {
            size: incumbent.len(),
            upper_bound: cover,
            optimal: incumbent.len() == cover,
            canonical: false,
            witness: incumbent,
            nodes: 0,
            elapsed: start.elapsed(),
        };
    }

    let dense = DenseComplement::new(neighbors);
    let search = Search::new(&dense, budget.clone(), start);

    let incumbent_internal: Vec<usize> = incumbent.iter().map(|&v| dense.internal[v]).collect();
    let (size, phase_one, complete, dual) = search.maximum(incumbent_internal, cover, exec);
    let mut witness: Vec<usize> = phase_one.iter().map(|&i| dense.original[i]).collect();
    witness.sort_unstable();
    if !complete {
        return MisOutcome {
            size,
            witness,
            upper_bound: dual.min(cover).max(size),
            optimal: false,
            canonical: false,
            nodes: search.nodes.load(Ordering::Relaxed),
            elapsed: start.elapsed(),
        };
    }

    let canonical = if witness == greedy {
        Some(greedy.clone())
    } else {
        search.lex_smallest(size, witness.clone(), exec)
    };
    let is_canonical = canonical.is_some();
    MisOutcome {
        size,
        witness: canonical.unwrap_or(witness),
        upper_bound: size,
        optimal: true,
        canonical: is_canonical,
        nodes: search.nodes.load(Ordering::Relaxed),
        elapsed: start.elapsed(),
    }
}

type Bits = Vec<u64>;

/// Vertices ordered so that each one has the largest conflict degree among
/// those not yet placed behind it (smallest-last order of the complement).
/// Ties go to the lower index.
fn degeneracy_order(neighbors: &[Vec<u32>]) -> Vec<usize> {
    let n = neighbors.len();
    let mut degree: Vec<usize> = neighbors.iter().map(Vec::len).collect();
    let mut placed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut heap: std::collections::BinaryHeap<(usize, std::cmp::Reverse<usize>)> =
        (0..n).map(|v| (degree[v], std::cmp::Reverse(v))).collect();
    while let Some((d, std::cmp::Reverse(v))) = heap.pop() {
        if placed[v] || d != degree[v] {
            continue;
        }
        placed[v] = true;
        order.push(v);
        for &u in &neighbors[v] {
            let u = u as usize;
            if !placed[u] {
                degree[u] -= 1;
                heap.push((degree[u], std::cmp::Reverse(u)));
            }
        }
    }
    order.reverse();
    order
}

#[inline]
fn clear_bit(bits: &mut [u64], i: usize) {
    bits[i / 64] &= !(1u64 << (i % 64));
}

#[inline]
fn set_bit(bits: &mut [u64], i: usize) {
    bits[i / 64] |= 1u64 << (i % 64);
}

#[inline]
fn has_bit(bits: &[u64], i: usize) -> bool {
    bits[i / 64] >> (i % 64) & 1 == 1
}

#[inline]
fn first_bit(bits: &[u64]) -> Option<usize> {
    bits.iter()
        .enumerate()
        .find(|(_, w)| **w != 0)
        .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
}

#[inline]
fn count_bits(bits: &[u64]) -> usize {
    bits.iter().map(|w| w.count_ones() as usize).sum()
}

/// Complement of the conflict graph, relabeled so that vertices of high
/// complement degree come first.
struct DenseComplement {
    words: usize,
    rows: Vec<Bits>,
    /// internal index -> original index
    original: Vec<usize>,
    /// original index -> internal index
    internal: Vec<usize>,
}

impl DenseComplement {
    fn new(neighbors: &[Vec<u32>]) -> Self {
        let n = neighbors.len();
        let words = n.div_ceil(64);
        let original = degeneracy_order(neighbors);
        let mut internal = vec![0; n];
        for (i, &v) in original.iter().enumerate() {
            internal[v] = i;
        }
        let mut full = vec![0u64; words];
        for i in 0..n {
            set_bit(&mut full, i);
        }
        let rows = (0..n)
            .map(|i| {
                let mut row = full.clone();
                clear_bit(&mut row, i);
                for &u in &neighbors[original[i]] {
                    clear_bit(&mut row, internal[u as usize]);
                }
                row
            })
            .collect();
        Self {
            words,
            rows,
            original,
            internal,
        }
    }

    fn all(&self) -> Bits {
        let mut bits = vec![0u64; self.words];
        for i in 0..self.rows.len() {
            set_bit(&mut bits, i);
        }
        bits
    }
}

struct Search<'a> {
    graph: &'a DenseComplement,
    budget: Budget,
    start: Instant,
    best: AtomicUsize,
    incumbent: Mutex<Vec<usize>>,
    nodes: AtomicU64,
    stop: AtomicBool,
    /// Search ends as soon as the incumbent reaches this size.
    goal: AtomicUsize,
}

/// Per-branch node counter, flushed to the shared counter in batches.
struct Local {
    nodes: u64,
}

const FLUSH_EVERY: u64 = 1024;

impl<'a> Search<'a> {
    fn new(graph: &'a DenseComplement, budget: Budget, start: Instant) -> Self {
        Self {
            graph,
            budget,
            start,
            best: AtomicUsize::new(0),
            incumbent: Mutex::new(Vec::new()),
            nodes: AtomicU64::new(0),
            stop: AtomicBool::new(false),
            goal: AtomicUsize::new(usize::MAX),
        }
    }

    fn tick(&self, local: &mut Local) {
        local.nodes += 1;
        if local.nodes >= FLUSH_EVERY.min(self.budget.max_nodes.max(1)) {
            self.flush(local);
        }
    }

    fn flush(&self, local: &mut Local) {
        let total = self.nodes.fetch_add(local.nodes, Ordering::Relaxed) + local.nodes;
        local.nodes = 0;
        let out_of_time = self
            .budget
            .max_time
            .is_some_and(|limit| self.start.elapsed() >= limit);
        if total >= self.budget.max_nodes || out_of_time {
            self.stop.store(true, Ordering::Relaxed);
        }
    }

    /// Clears a stop raised by reaching the goal; a spent budget is
    /// re-detected immediately.
    fn clear_goal_stop(&self) {
        self.stop.store(false, Ordering::SeqCst);
        self.flush(&mut Local { nodes: 0 });
    }

    fn offer(&self, set: &[usize]) {
        let mut inc = self.incumbent.lock().expect("incumbent lock poisoned");
        if set.len() > inc.len() {
            *inc = set.to_vec();
            self.best.fetch_max(set.len(), Ordering::SeqCst);
            if set.len() >= self.goal.load(Ordering::Relaxed) {
                self.stop.store(true, Ordering::Relaxed);
            }
        }
    }

    /// Greedy coloring of `p` (classes are independent in the complement,
    /// i.e. cliques of the conflict graph). Only vertices whose color is at
    /// least `kmin` are listed, in nondecreasing color order.
    fn color_sort(&self, p: &[u64], kmin: usize) -> (Vec<usize>, Vec<usize>) {
        let mut uncolored = p.to_vec();
        let mut q = vec![0u64; p.len()];
        let mut order = Vec::new();
        let mut colors = Vec::new();
        let mut k = 0;
        while uncolored.iter().any(|w| *w != 0) {
            k += 1;
            q.copy_from_slice(&uncolored);
            while let Some(v) = first_bit(&q) {
                clear_bit(&mut uncolored, v);
                clear_bit(&mut q, v);
                for (qw, aw) in q.iter_mut().zip(&self.graph.rows[v]) {
                    *qw &= !aw;
                }
                if k >= kmin {
                    order.push(v);
                    colors.push(k);
                }
            }
        }
        (order, colors)
    }

    fn expand(&self, cur: &mut Vec<usize>, mut p: Bits, local: &mut Local) -> bool {
        self.tick(local);
        if self.stop.load(Ordering::Relaxed) {
            return false;
        }
        let kmin = (self.best.load(Ordering::Relaxed) + 1).saturating_sub(cur.len()).max(1);
        let (order, colors) = self.color_sort(&p, kmin);
        let mut np = vec![0u64; p.len()];
        for i in (0..order.len()).rev() {
            if cur.len() + colors[i] <= self.best.load(Ordering::Relaxed) {
                return true;
            }
            if self.stop.load(Ordering::Relaxed) {
                return false;
            }
            let v = order[i];
            let mut any = false;
            for ((nw, pw), aw) in np.iter_mut().zip(&p).zip(&self.graph.rows[v]) {
                *nw = pw & aw;
                any |= *nw != 0;
            }
            cur.push(v);
            if any {
                if !self.expand(cur, np.clone(), local) {
                    cur.pop();
                    return false;
                }
            } else if cur.len() > self.best.load(Ordering::Relaxed) {
                self.offer(cur);
            }
            cur.pop();
            clear_bit(&mut p, v);
        }
        true
    }

    /// Root-parallel search for a maximum clique of the complement inside
    /// `root`. Returns (size, incumbent, completed, dual bound).
    fn run_root(&self, root: Bits, exec: Exec) -> (usize, Vec<usize>, bool, usize) {
        let kmin = self.best.load(Ordering::SeqCst) + 1;
        let (order, colors) = self.color_sort(&root, kmin);
        let len = order.len();
        let completed: Vec<AtomicBool> = (0..len).map(|_| AtomicBool::new(false)).collect();
        exec::map_range(exec, len, |j| {
            let idx = len - 1 - j;
            if colors[idx] <= self.best.load(Ordering::Relaxed) {
                completed[idx].store(true, Ordering::Relaxed);
                return;
            }
            if self.stop.load(Ordering::Relaxed) {
                return;
            }
            let v = order[idx];
            let mut p = root.clone();
            for &later in &order[idx + 1..] {
                clear_bit(&mut p, later);
            }
            let mut any = false;
            for (pw, aw) in p.iter_mut().zip(&self.graph.rows[v]) {
                *pw &= aw;
                any |= *pw != 0;
            }
            let mut local = Local { nodes: 0 };
            let mut cur = vec![v];
            let done = if any {
                self.expand(&mut cur, p, &mut local)
            } else {
                self.offer(&cur);
                true
            };
            self.flush(&mut local);
            completed[idx].store(done, Ordering::Relaxed);
        });
        let best = self.best.load(Ordering::SeqCst);
        let dual = (0..len)
            .filter(|&i| !completed[i].load(Ordering::Relaxed))
            .map(|i| colors[i])
            .max()
            .unwrap_or(0)
            .max(best);
        let reached_goal = best >= self.goal.load(Ordering::SeqCst);
        let all_done = completed.iter().all(|c| c.load(Ordering::Relaxed));
        let incumbent = self.incumbent.lock().expect("incumbent lock poisoned").clone();
        (best, incumbent, all_done || reached_goal, dual)
    }

    fn maximum(&self, seed: Vec<usize>, upper: usize, exec: Exec) -> (usize, Vec<usize>, bool, usize) {
        self.goal.store(upper, Ordering::SeqCst);
        self.offer(&seed);
        let out = self.run_root(self.graph.all(), exec);
        if out.2 {
            self.clear_goal_stop();
        }
        out
    }

    /// Finds a clique of the complement of size `target` inside `cands`.
    /// `Err(())` when the budget ran out.
    fn find(&self, cands: &Bits, target: usize, exec: Exec) -> Result<Option<Vec<usize>>, ()> {
        if target == 0 {
            return Ok(Some(Vec::new()));
        }
        if count_bits(cands) < target {
            return Ok(None);
        }
        if self.stop.load(Ordering::Relaxed) {
            return Err(());
        }
        self.best.store(target - 1, Ordering::SeqCst);
        self.goal.store(target, Ordering::SeqCst);
        self.incumbent.lock().expect("incumbent lock poisoned").clear();
        let (best, inc, complete, _) = self.run_root(cands.clone(), exec);
        if best >= target {
            self.clear_goal_stop();
            return Ok(Some(inc));
        }
        if complete {
            Ok(None)
        } else {
            Err(())
        }
    }

    /// Lexicographically smallest independent set of size `f` (original
    /// indices), given that `f` is the independence number and `hint` is
    /// one maximum set.
    fn lex_smallest(&self, f: usize, hint: Vec<usize>, exec: Exec) -> Option<Vec<usize>> {
        let g = self.graph;
        let n = g.rows.len();
        let mut chosen: Vec<usize> = Vec::with_capacity(f);
        let mut cand = g.all();
        let mut hint = hint;
        while chosen.len() < f {
            let need = f - chosen.len();
            let mut accepted = false;
            let mut later = g.all();
            for v in 0..n {
                let iv = g.internal[v];
                clear_bit(&mut later, iv);
                if !has_bit(&cand, iv) {
                    continue;
                }
                let mut sub = cand.clone();
                for ((sw, aw), lw) in sub.iter_mut().zip(&g.rows[iv]).zip(&later) {
                    *sw &= aw & lw;
                }
                if hint.first() == Some(&v) {
                    hint.remove(0);
                } else {
                    match self.find(&sub, need - 1, exec) {
                        Ok(Some(found)) => {
                            hint = found.into_iter().map(|i| g.original[i]).collect();
                            hint.sort_unstable();
                        }
                        Ok(None) => continue,
                        Err(()) => return None,
                    }
                }
                chosen.push(v);
                cand = sub;
                accepted = true;
                break;
            }
            if !accepted {
                return None;
            }
        }
        Some(chosen)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, edges: &[(u32, u32)]) -> Vec<Vec<u32>> {
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            adj[a as usize].push(b);
            adj[b as usize].push(a);
        }
        for l in &mut adj {
            l.sort_unstable();
        }
        adj
    }

    /// Exhaustive independence number and lexicographically smallest
    /// maximum set for tiny graphs.
    fn brute(adj: &[Vec<u32>]) -> (usize, Vec<usize>) {
        let n = adj.len();
        let masks: Vec<u64> = adj
            .iter()
            .map(|l| l.iter().fold(0u64, |m, &u| m | 1 << u))
            .collect();
        let mut best: (usize, Vec<usize>) = (0, Vec::new());
        for s in 0u64..(1 << n) {
            let indep = (0..n).all(|v| s >> v & 1 == 0 || masks[v] & s == 0);
            if !indep {
                continue;
            }
            let set: Vec<usize> = (0..n).filter(|&v| s >> v & 1 == 1).collect();
            if set.len() > best.0 || (set.len() == best.0 && set < best.1) {
                best = (set.len(), set);
            }
        }
        best
    }

    #[test]
    fn small_graphs_match_brute_force() {
        let mut state = 0x2545_f491_4f6c_dd1du64;
        for trial in 0..300 {
            let n = 1 + trial % 14;
            let mut edges = Vec::new();
            for a in 0..n as u32 {
                for b in a + 1..n as u32 {
                    state ^= state << 13;
                    state ^= state >> 7;
                    state ^= state << 17;
                    if state % 100 < 35 {
                        edges.push((a, b));
                    }
                }
            }
            let adj = graph(n, &edges);
            let (f, lex) = brute(&adj);
            for exec in [Exec::Sequential, Exec::Parallel] {
                let out = solve(&adj, &Budget::unlimited(), exec);
                assert!(out.optimal && out.canonical);
                assert_eq!(out.size, f, "trial {trial}");
                assert_eq!(out.witness, lex, "trial {trial}");
            }
        }
    }

    #[test]
    fn cover_and_greedy_close_easy_graphs() {
        // disjoint triangles: greedy 1 per triangle, cover 1 per triangle
        let adj = graph(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]);
        let out = solve(&adj, &Budget::unlimited(), Exec::Sequential);
        assert_eq!(out.size, 2);
        assert_eq!(out.nodes, 0);
        assert_eq!(out.witness, vec![0, 3]);
    }

    #[test]
    fn exhausted_budget_reports_dual_bound() {
        // 5-cycle: greedy 2, cover 3, optimum 2; a zero-node budget stops the search
        let adj = graph(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]);
        let out = solve(&adj, &Budget::nodes(0), Exec::Sequential);
        assert!(!out.optimal);
        assert!(out.size <= 2 && out.upper_bound >= 2 && out.upper_bound <= 3);
        let out = solve(&adj, &Budget::unlimited(), Exec::Sequential);
        assert!(out.optimal);
        assert_eq!(out.size, 2);
        assert_eq!(out.witness, vec![0, 2]);
    }

    #[test]
    fn empty_graph() {
        let out = solve(&[], &Budget::unlimited(), Exec::Sequential);
        assert_eq!(out.size, 0);
        assert!(out.optimal);
    }
}
