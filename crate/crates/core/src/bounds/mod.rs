//! Closed-form and recursive upper bounds on extremal densities.

mod arith;
mod recursion;
mod theorems;

pub use arith::{binomial, binomial_u128, falling_factorial, ratio, ratio_big, rational_to_f64};
pub use recursion::{
    prefix_sums, recursive_delta_bound, recursive_delta_bound_real, split_pattern, DeltaRecursion, PatternSplit,
    RecursionMode, Rule, TraceStep,
};
pub use theorems::{
    a_d, base_delta1, c_d, lemma22_bound, lemma22_bound_real, lemma22_gamma_min, lemma22_inner_k, lemma23_bound,
    lemma23_bound_real, ln_threshold, thm1_bound, thm1_bound_real, thm2_bound, thm3_bound, thm3_interval_length,
    BoundName, BoundRecord, BoundValue, CSV_HEADER, THM2_DEFAULT_CONSTANT, THM3_DEFAULT_CONSTANT,
};
