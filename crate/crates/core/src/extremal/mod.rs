//! Exact extremal numbers `f(n, k, P)` and densities `δ(n, k, P)`.
//!
//! A `P`-free subfamily of a layer is an independent set of the
//! [`ConflictGraph`]; the extremal number is its independence number.

mod graph;
pub mod mis;

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

pub use graph::{ConflictGraph, DEFAULT_VERTEX_CAP};
pub use mis::{Budget, MisOutcome};

use crate::bounds::binomial_u128;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::patterns::{is_p_free, Pattern, SubsetWord};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtremalResult {
    pub n: usize,
    pub k: usize,
    pub pattern: Pattern,
    pub f: usize,
    /// Smallest maximum `P`-free family in lexicographic order of colex
    /// vertex indices, when the solver certified it.
    pub witness: Vec<SubsetWord>,
    pub nodes: u64,
    pub ms: u64,
}

impl ExtremalResult {
    pub fn layer_size(&self) -> u128 {
        binomial_u128(self.n as u64, self.k as u64)
    }

    /// `f / C(n, k)` in lowest terms.
    pub fn delta(&self) -> BigRational {
        BigRational::new(BigInt::from(self.f), BigInt::from(self.layer_size()))
    }

    pub fn to_record(&self) -> ExtremalRecord {
        let delta = self.delta();
        ExtremalRecord {
            n: self.n,
            k: self.k,
            pattern: self.pattern,
            f: self.f,
            delta_num: delta.numer().to_string(),
            delta_den: delta.denom().to_string(),
            witness: self.witness.iter().map(|s| s.to_string()).collect(),
            nodes: self.nodes,
            ms: self.ms,
        }
    }

    pub fn from_record(rec: &ExtremalRecord) -> Result<Self> {
        let witness = rec
            .witness
            .iter()
            .map(|s| SubsetWord::parse(rec.n, s))
            .collect::<Result<Vec<_>>>()?;
        let out = Self {
            n: rec.n,
            k: rec.k,
            pattern: rec.pattern,
            f: rec.f,
            witness,
            nodes: rec.nodes,
            ms: rec.ms,
        };
        let delta = out.delta();
        if delta.numer().to_string() != rec.delta_num || delta.denom().to_string() != rec.delta_den {
            return Err(Error::param(format!(
                "record density {}/{} disagrees with f = {} on C({},{})",
                rec.delta_num, rec.delta_den, rec.f, rec.n, rec.k
            )));
        }
        Ok(out)
    }

    /// One line of the results cache.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(&self.to_record()).expect("record serializes")
    }

    pub fn from_json_line(line: &str) -> Result<Self> {
        let rec: ExtremalRecord = serde_json::from_str(line)?;
        Self::from_record(&rec)
    }
}

/// Serialized form of [`ExtremalResult`]: densities as exact decimal
/// strings, witness sets in the element-list text form.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtremalRecord {
    pub n: usize,
    pub k: usize,
    pub pattern: Pattern,
    pub f: usize,
    pub delta_num: String,
    pub delta_den: String,
    pub witness: Vec<String>,
    pub nodes: u64,
    pub ms: u64,
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub budget: Budget,
    pub exec: Exec,
    pub vertex_cap: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            budget: Budget::default(),
            exec: Exec::default(),
            vertex_cap: DEFAULT_VERTEX_CAP,
        }
    }
}

pub fn build_conflict_graph(n: usize, k: usize, pattern: &Pattern) -> Result<ConflictGraph> {
    ConflictGraph::build(n, k, pattern)
}

pub fn max_independent_set(graph: &ConflictGraph, budget: &Budget) -> Result<ExtremalResult> {
    max_independent_set_with(graph, budget, Exec::default())
}

pub fn max_independent_set_with(graph: &ConflictGraph, budget: &Budget, exec: Exec) -> Result<ExtremalResult> {
    solve_graph(graph, budget, exec, usize::MAX)
}

fn solve_graph(graph: &ConflictGraph, budget: &Budget, exec: Exec, upper: usize) -> Result<ExtremalResult> {
    let out = mis::solve_bounded(graph.neighbor_lists(), budget, exec, upper);
    let witness: Vec<SubsetWord> = out.witness.iter().map(|&v| graph.vertices()[v]).collect();
    assert!(
        is_p_free(&witness, graph.pattern())?,
        "solver returned a family that is not {}-free",
        graph.pattern()
    );
    let result = ExtremalResult {
        n: graph.n(),
        k: graph.k(),
        pattern: *graph.pattern(),
        f: out.size,
        witness,
        nodes: out.nodes,
        ms: out.elapsed.as_millis() as u64,
    };
    if !out.optimal {
        return Err(Error::BudgetExhausted {
            best: out.size,
            upper_bound: out.upper_bound,
            partial: Box::new(result),
        });
    }
    if !out.canonical {
        log::warn!(
            "f({},{},{}) = {} certified, witness is not the canonical one",
            graph.n(),
            graph.k(),
            graph.pattern(),
            out.size
        );
    }
    Ok(result)
}

pub fn extremal_number(n: usize, k: usize, pattern: &Pattern) -> Result<ExtremalResult> {
    extremal_number_with(n, k, pattern, &SolveOptions::default())
}

/// Exact `f(n, k, P)`.
///
/// Besides the graph's own bounds the solver is handed the averaging
/// bounds `f(n,k) <= ⌊n f(n-1,k-1) / k⌋` and `f(n,k) <= ⌊n f(n-1,k) / (n-k)⌋`:
/// the members containing (avoiding) a fixed element form a `P`-free family
/// on a smaller layer, and every member contains `k` (avoids `n-k`)
/// elements. The smaller layers are solved first, recursively.
pub fn extremal_number_with(n: usize, k: usize, pattern: &Pattern, opts: &SolveOptions) -> Result<ExtremalResult> {
    let mut memo = HashMap::new();
    solve_layer(n, k, pattern, opts, &mut memo)
}

/// Certified upper bound on `f(n, k, P)` from a finished or exhausted solve.
fn layer_upper(
    n: usize,
    k: usize,
    pattern: &Pattern,
    opts: &SolveOptions,
    memo: &mut HashMap<(usize, usize), usize>,
) -> Result<usize> {
    if let Some(&u) = memo.get(&(n, k)) {
        return Ok(u);
    }
    let u = match solve_layer(n, k, pattern, opts, memo) {
        Ok(r) => r.f,
        Err(Error::BudgetExhausted { upper_bound, .. }) => upper_bound,
        Err(e) => return Err(e),
    };
    memo.insert((n, k), u);
    Ok(u)
}

fn solve_layer(
    n: usize,
    k: usize,
    pattern: &Pattern,
    opts: &SolveOptions,
    memo: &mut HashMap<(usize, usize), usize>,
) -> Result<ExtremalResult> {
    let graph = ConflictGraph::build_with_cap(n, k, pattern, opts.vertex_cap)?;
    let lists = graph.neighbor_lists();
    if mis::greedy_lex(lists).len() == mis::clique_cover(lists).1 || k == 0 || k == n {
        return solve_graph(&graph, &opts.budget, opts.exec, usize::MAX);
    }
    let below = layer_upper(n - 1, k - 1, pattern, opts, memo)?;
    let beside = layer_upper(n - 1, k, pattern, opts, memo)?;
    let upper = (n * below / k).min(n * beside / (n - k));
    solve_graph(&graph, &opts.budget, opts.exec, upper)
}

pub fn extremal_density(n: usize, k: usize, pattern: &Pattern) -> Result<BigRational> {
    Ok(extremal_number(n, k, pattern)?.delta())
}

/// Unordered pairs of members at symmetric difference exactly 2.
pub fn count_distance2_pairs(family: &[SubsetWord]) -> u64 {
    let mut count = 0;
    for (i, a) in family.iter().enumerate() {
        for b in &family[i + 1..] {
            if (a.bits() ^ b.bits()).count_ones() == 2 {
                count += 1;
            }
        }
    }
    count
}

/// Same count for a uniform family through the superset double count
/// `Σ_C C(y_C, 2)`, with `y_C` the number of members inside the
/// `(k+1)`-set `C`.
pub fn count_distance2_pairs_by_shadows(family: &[SubsetWord]) -> Result<u64> {
    let Some(first) = family.first() else {
        return Ok(0);
    };
    let k = first.len();
    let full = crate::patterns::ground_mask(first.ground());
    let mut y: HashMap<u64, u64> = HashMap::new();
    for a in family {
        first.check_ground(a)?;
        if a.len() != k {
            return Err(Error::LayerMismatch(k));
        }
        for x in crate::patterns::BitIter(full & !a.bits()) {
            *y.entry(a.bits() | 1 << x).or_insert(0) += 1;
        }
    }
    Ok(y.values().map(|&c| c * c.saturating_sub(1) / 2).sum())
}
