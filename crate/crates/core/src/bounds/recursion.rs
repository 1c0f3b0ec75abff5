//! Pattern-aware evaluation of the induction behind the closed-form bound
//! `δ(k, d) <= a_d k^{-c_d}`.
//!
//! * `d = 1`: the base case `1/k`.
//! * end signs differ: the end-trimming step with
//!   `γ = 8 sqrt(a_{d-1}) k^{-c_{d-1}/4}` applied to the trimmed pattern.
//! * end signs agree: the pattern splits at the first even zero of its
//!   prefix sums into `Q1 Q2`; the split step uses `k1 = ⌈k^β⌉` with
//!   `β = c_{d2} / (2 d1 + c_{d1})` on the shorter half.
//!
//! Wherever a step's preconditions fail for the given `k` the step
//! contributes the trivial bound 1, which is what the induction does below
//! its threshold.

use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use super::theorems::{
    c_f64, format_k, lemma22_bound_real, lemma22_gamma_min, lemma22_inner_k, lemma23_bound_real, ln_a, BoundName,
    BoundRecord, BoundValue,
};
use crate::error::{Error, Result};
use crate::patterns::{Pattern, Sign};

/// Result of [`split_pattern`]: `P = Q1 Q2` with `Q1` of order `2 d1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PatternSplit {
    pub d1: usize,
    pub first: Pattern,
    pub second: Pattern,
}

/// Prefix sums `c_l = #{+ in P_1..P_l} - #{- in P_1..P_l}` for `l = 0..=t`.
pub fn prefix_sums(p: &Pattern) -> Vec<i64> {
    let mut out = Vec::with_capacity(p.order() + 1);
    out.push(0);
    let mut c = 0;
    for s in p.signs() {
        c += if s == Sign::Plus { 1 } else { -1 };
        out.push(c);
    }
    out
}

/// Splits a balanced `P` with `P_1 = P_{2d}`, `d >= 2`, at the smallest
/// `d1` with `c_{2 d1} = 0`.
pub fn split_pattern(p: &Pattern) -> Result<PatternSplit> {
    let d = p
        .half_order()
        .ok_or_else(|| Error::UnbalancedPattern(p.to_string()))?;
    if d < 2 || p.sign(1) != p.sign(2 * d) {
        return Err(Error::BadSplit(format!(
            "{p}: needs d >= 2 and equal end signs"
        )));
    }
    let c = prefix_sums(p);
    let d1 = (1..d)
        .find(|&d1| c[2 * d1] == 0)
        .ok_or_else(|| Error::NoSplit(p.to_string()))?;
    let first = p.slice(1, 2 * d1).expect("in range");
    let second = p.slice(2 * d1 + 1, 2 * d).expect("in range");
    Ok(PatternSplit { d1, first, second })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RecursionMode {
    /// Parameter choices exactly as in the induction.
    AsProved,
    /// Not from the induction: grid-searches `γ` in the end-trimming step
    /// and keeps the smallest resulting value.
    OptimizeGamma,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Rule {
    Base,
    EndTrim { gamma: f64, inner_k: f64, inner: Pattern },
    Split { d1: usize, k1: f64, k2: f64, mirrored: bool },
    Trivial(&'static str),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceStep {
    pub depth: usize,
    pub k: f64,
    pub pattern: Pattern,
    pub rule: Rule,
    pub value: f64,
}

#[derive(Clone, Debug)]
struct Evaluated {
    value: f64,
    trace: Vec<TraceStep>,
}

/// Memoized evaluator; safe to share between threads. Entries are pure
/// functions of their key, so concurrent writers store identical values.
#[derive(Debug, Default)]
pub struct DeltaRecursion {
    memo: RwLock<HashMap<(u64, Pattern, bool), Evaluated>>,
}

impl DeltaRecursion {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn evaluate(&self, k: f64, p: &Pattern, mode: RecursionMode) -> Result<(f64, Vec<TraceStep>)> {
        if p.half_order().is_none() {
            return Err(Error::UnbalancedPattern(p.to_string()));
        }
        if !(k >= 1.0) {
            return Err(Error::param(format!("k = {k} must be at least 1")));
        }
        let e = self.eval(k.floor(), p, mode == RecursionMode::OptimizeGamma);
        Ok((e.value, e.trace))
    }

    fn eval(&self, k: f64, p: &Pattern, optimize: bool) -> Evaluated {
        let key = (k.to_bits(), *p, optimize);
        if let Some(hit) = self.memo.read().expect("memo lock poisoned").get(&key) {
            return hit.clone();
        }
        let out = self.compute(k, p, optimize);
        self.memo
            .write()
            .expect("memo lock poisoned")
            .entry(key)
            .or_insert_with(|| out.clone());
        out
    }

    fn leaf(k: f64, p: &Pattern, rule: Rule, value: f64) -> Evaluated {
        Evaluated {
            value,
            trace: vec![TraceStep {
                depth: 0,
                k,
                pattern: *p,
                rule,
                value,
            }],
        }
    }

    fn node(k: f64, p: &Pattern, rule: Rule, value: f64, children: &[&Evaluated]) -> Evaluated {
        let mut trace = vec![TraceStep {
            depth: 0,
            k,
            pattern: *p,
            rule,
            value,
        }];
        for child in children {
            trace.extend(child.trace.iter().map(|s| TraceStep {
                depth: s.depth + 1,
                ..s.clone()
            }));
        }
        Evaluated { value, trace }
    }

    fn compute(&self, k: f64, p: &Pattern, optimize: bool) -> Evaluated {
        let d = p.order() / 2;
        if d == 1 {
            return Self::leaf(k, p, Rule::Base, 1.0 / k);
        }
        if p.sign(1) != p.sign(2 * d) {
            self.end_trim(k, p, d, optimize)
        } else {
            self.split(k, p, optimize)
        }
    }

    fn end_trim(&self, k: f64, p: &Pattern, d: usize, optimize: bool) -> Evaluated {
        let inner = p.slice(2, 2 * d - 1).expect("d >= 2");
        let lo = lemma22_gamma_min(k);
        let proof_gamma = 8.0 * (0.5 * ln_a(d - 1)).exp() * k.powf(-c_f64(d - 1) / 4.0);
        let mut candidates = vec![proof_gamma];
        if optimize {
            let steps = 48;
            let lo = lo.max(1e-300);
            candidates.extend((0..=steps).map(|i| lo * (1.0 / lo).powf(i as f64 / steps as f64)));
        }
        let mut best: Option<Evaluated> = None;
        for gamma in candidates {
            if !(gamma >= lo && gamma <= 1.0) {
                continue;
            }
            let inner_k = lemma22_inner_k(k, gamma);
            let sub = self.eval(inner_k, &inner, optimize);
            let value = lemma22_bound_real(k, gamma, sub.value)
                .expect("gamma checked")
                .value_f64();
            if best.as_ref().is_none_or(|b| value < b.value) {
                best = Some(Self::node(k, p, Rule::EndTrim { gamma, inner_k, inner }, value, &[&sub]));
            }
        }
        best.unwrap_or_else(|| Self::leaf(k, p, Rule::Trivial("gamma outside the admissible interval"), 1.0))
    }

    fn split(&self, k: f64, p: &Pattern, optimize: bool) -> Evaluated {
        let s = split_pattern(p).expect("equal end signs always split");
        let d1 = s.d1;
        let d2 = p.order() / 2 - d1;
        // the shorter half takes the small interval
        let mirrored = d1 > d2;
        let (ds, dl, qs, ql) = if mirrored {
            (d2, d1, s.second, s.first)
        } else {
            (d1, d2, s.first, s.second)
        };
        let beta = c_f64(dl) / (2.0 * ds as f64 + c_f64(ds));
        let k_small = k.powf(beta).ceil();
        let k_large = k - 2.0 * k_small;
        if k_large < 1.0 {
            return Self::leaf(k, p, Rule::Trivial("split leaves no room for the second part"), 1.0);
        }
        let small = self.eval(k_small, &qs, optimize);
        let large = self.eval(k_large, &ql, optimize);
        let value = lemma23_bound_real(k_small, k_large, ds, dl, small.value, large.value)
            .expect("split sizes checked")
            .value_f64();
        let (k1, k2) = if mirrored { (k_large, k_small) } else { (k_small, k_large) };
        let rule = Rule::Split { d1, k1, k2, mirrored };
        let children: [&Evaluated; 2] = if mirrored { [&large, &small] } else { [&small, &large] };
        Self::node(k, p, rule, value, &children)
    }
}

fn shared() -> &'static DeltaRecursion {
    static SHARED: OnceLock<DeltaRecursion> = OnceLock::new();
    SHARED.get_or_init(DeltaRecursion::new)
}

/// Bound on `δ(2k, k, P)` from the pattern-aware induction.
pub fn recursive_delta_bound(k: u64, p: &Pattern) -> Result<(BoundRecord, Vec<TraceStep>)> {
    recursive_delta_bound_real(k as f64, p, RecursionMode::AsProved)
}

/// As [`recursive_delta_bound`], for integer-valued `k` beyond `u64` and
/// with a selectable [`RecursionMode`].
pub fn recursive_delta_bound_real(k: f64, p: &Pattern, mode: RecursionMode) -> Result<(BoundRecord, Vec<TraceStep>)> {
    let (value, trace) = shared().evaluate(k, p, mode)?;
    let value = if p.order() == 2 && k <= 9.0e15 {
        BoundValue::Exact(super::arith::ratio(1u64, k as u64))
    } else {
        BoundValue::Approx(value)
    };
    let mut rec = BoundRecord {
        name: BoundName::Recursive,
        n: None,
        k: Some(k.floor()),
        d: Some(p.order() / 2),
        params: Vec::new(),
        value,
        valid: true,
        asymptotic: false,
    }
    .param("pattern", p)
    .param("mode", match mode {
        RecursionMode::AsProved => "as-proved",
        RecursionMode::OptimizeGamma => "optimize-gamma",
    })
    .param("steps", trace.len());
    if let Some(TraceStep { rule: Rule::Split { k1, k2, .. }, .. }) = trace.first() {
        rec = rec.param("k1", format_k(*k1)).param("k2", format_k(*k2));
    }
    Ok((rec, trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Pattern {
        s.parse().unwrap()
    }

    #[test]
    fn split_examples() {
        let s = split_pattern(&p("+--+")).unwrap();
        assert_eq!((s.d1, s.first, s.second), (1, p("+-"), p("-+")));
        let s = split_pattern(&p("++---+-+")).unwrap();
        assert_eq!((s.d1, s.first, s.second), (2, p("++--"), p("-+-+")));
        assert!(matches!(split_pattern(&p("-+-+")), Err(Error::BadSplit(_))));
        assert!(matches!(split_pattern(&p("+-")), Err(Error::BadSplit(_))));
        assert!(matches!(split_pattern(&p("++-")), Err(Error::UnbalancedPattern(_))));
    }

    #[test]
    fn split_always_exists_for_equal_ends() {
        for d in 2..=6 {
            for q in Pattern::all_balanced(d) {
                if q.sign(1) != q.sign(2 * d) {
                    continue;
                }
                let s = split_pattern(&q).unwrap();
                assert!(s.d1 >= 1 && s.d1 < d);
                assert!(s.first.is_balanced() && s.second.is_balanced());
                assert_eq!(s.first.concat(&s.second), Some(q));
            }
        }
    }

    #[test]
    fn base_case_value() {
        let (rec, trace) = recursive_delta_bound(7, &p("+-")).unwrap();
        assert_eq!(rec.value.render(), "1/7");
        assert_eq!(trace.len(), 1);
        assert_eq!(trace[0].rule, Rule::Base);
    }

    #[test]
    fn interval_pattern_at_large_k_splits_once() {
        let (rec, trace) = recursive_delta_bound(1_000_000, &p("+--+")).unwrap();
        let v = rec.value_f64();
        assert!(v > 0.0 && v <= 1.0);
        let splits = trace
            .iter()
            .filter(|s| matches!(s.rule, Rule::Split { .. }))
            .count();
        assert_eq!(splits, 1);
        assert_eq!(trace[0].depth, 0);
        assert!(trace[1..].iter().all(|s| s.depth == 1 && s.rule == Rule::Base));
    }

    #[test]
    fn small_k_is_trivial() {
        for q in Pattern::all_balanced(2) {
            let (rec, _) = recursive_delta_bound(5, &q).unwrap();
            assert_eq!(rec.value_f64(), 1.0, "{q}");
        }
    }

    #[test]
    fn optimized_gamma_never_worse() {
        for k in [1e8, 1e12, 1e20, 1e40] {
            for q in Pattern::all_balanced(2).into_iter().chain(Pattern::all_balanced(3)) {
                let (a, _) = recursive_delta_bound_real(k, &q, RecursionMode::AsProved).unwrap();
                let (b, _) = recursive_delta_bound_real(k, &q, RecursionMode::OptimizeGamma).unwrap();
                assert!(b.value_f64() <= a.value_f64(), "{q} {k}");
            }
        }
    }

    #[test]
    fn concurrent_evaluation_is_consistent() {
        let ev = DeltaRecursion::new();
        let q = p("+-+--+");
        let results: Vec<f64> = std::thread::scope(|s| {
            let hs: Vec<_> = (0..8)
                .map(|_| s.spawn(|| ev.evaluate(1e30, &q, RecursionMode::AsProved).unwrap().0))
                .collect();
            hs.into_iter().map(|h| h.join().unwrap()).collect()
        });
        assert!(results.windows(2).all(|w| w[0] == w[1]));
    }
}
