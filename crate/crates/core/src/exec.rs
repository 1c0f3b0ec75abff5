//! Execution policy for the data-parallel loops of the crate.
//!
//! Every exhaustive sweep and Monte Carlo batch goes through the helpers in
//! this module. With the `parallel` feature (on by default) they run on the
//! rayon global pool; without it, or with [`Exec::Sequential`], they run as
//! plain iterator chains. Both paths return results in input order, so
//! callers observe identical values either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Selects how the data-parallel loops execute.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Exec {
    Sequential,
    /// Uses rayon when the `parallel` feature is compiled in, otherwise
    /// falls back to sequential execution.
    #[default]
    Parallel,
}

impl Exec {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

/// Maps `f` over `items`, preserving order.
pub fn map<T, R, F>(exec: Exec, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return items.par_iter().map(f).collect();
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Maps `f` over `0..len`, preserving order.
pub fn map_range<R, F>(exec: Exec, len: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..len).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..len).map(f).collect()
}

/// True iff `pred` holds for every index in `0..len`.
pub fn all_range<F>(exec: Exec, len: usize, pred: F) -> bool
where
    F: Fn(usize) -> bool + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..len).into_par_iter().all(pred);
    }
    let _ = exec;
    (0..len).all(pred)
}

/// Sums `f` over `0..len` with wrapping-free `u64` addition.
pub fn sum_range<F>(exec: Exec, len: usize, f: F) -> u64
where
    F: Fn(usize) -> u64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..len).into_par_iter().map(f).sum();
    }
    let _ = exec;
    (0..len).map(f).sum()
}

/// Runs the closures of `jobs` and returns their results in order.
pub fn run_jobs<R, F>(exec: Exec, jobs: Vec<F>) -> Vec<R>
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return jobs.into_par_iter().map(|job| job()).collect();
    }
    let _ = exec;
    jobs.into_iter().map(|job| job()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_policies_agree() {
        let items: Vec<u64> = (0..1000).collect();
        let seq = map(Exec::Sequential, &items, |x| x * x);
        let par = map(Exec::Parallel, &items, |x| x * x);
        assert_eq!(seq, par);
        assert_eq!(
            sum_range(Exec::Sequential, 500, |i| i as u64),
            sum_range(Exec::Parallel, 500, |i| i as u64)
        );
        assert!(all_range(Exec::Parallel, 100, |i| i < 100));
        assert!(!all_range(Exec::Sequential, 100, |i| i < 99));
    }
}
