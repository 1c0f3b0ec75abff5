//! Random processes on the middle layer: the interval process for
//! interval patterns, random restrictions, and the singly hit interval
//! count behind the alternating construction.
//!
//! Every trial draws from its own ChaCha stream keyed by the trial index,
//! so results do not depend on how trials are scheduled.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::seq::index::sample;
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::altstruct::singleton_hits;
use crate::bounds::{binomial, rational_to_f64};
use crate::error::{Error, Result};
use crate::exec::{self, Exec};
use crate::patterns::{extract_bits, ground_mask, KSubsets, SubsetWord, MAX_GROUND};

pub type Rng = ChaCha8Rng;

/// The generator for `stream` under `seed`.
pub fn rng(seed: u64, stream: u64) -> Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// A uniform `k`-subset of `[n]`.
pub fn random_subset(rng: &mut Rng, n: usize, k: usize) -> SubsetWord {
    let bits = sample(rng, n, k).into_iter().fold(0u64, |acc, i| acc | 1 << i);
    SubsetWord::from_bits_unchecked(n, bits)
}

/// A uniform `k`-subset of the elements set in `within`.
fn random_subset_of(rng: &mut Rng, within: u64, k: usize) -> u64 {
    let pool: Vec<u32> = crate::patterns::BitIter(within).map(|i| i as u32).collect();
    sample(rng, pool.len(), k).into_iter().fold(0u64, |acc, i| acc | 1 << pool[i])
}

/// `[n]` cut into `m = ⌊n / 8d²⌋` consecutive intervals of length `8d²`,
/// the remainder handed out one element at a time from the first interval
/// on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntervalProcessConfig {
    pub n: usize,
    pub d: usize,
    lengths: Vec<usize>,
}

impl IntervalProcessConfig {
    pub fn new(n: usize, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::param("d must be at least 1"));
        }
        if n == 0 || n > MAX_GROUND || n % 2 != 0 {
            return Err(Error::param(format!("n = {n} must be even and in [2, {MAX_GROUND}]")));
        }
        let base = 8 * d * d;
        if base > n {
            return Err(Error::param(format!("need 8d² <= n, got d = {d}, n = {n}")));
        }
        let m = n / base;
        let mut lengths = vec![base; m];
        for i in 0..n - m * base {
            lengths[i % m] += 1;
        }
        Ok(Self { n, d, lengths })
    }

    pub fn intervals(&self) -> usize {
        self.lengths.len()
    }

    /// Length of interval `i` (1-indexed).
    pub fn interval_len(&self, i: usize) -> usize {
        self.lengths[i - 1]
    }

    /// Interval `i` (1-indexed) as a bit mask over `[n]`.
    pub fn interval_mask(&self, i: usize) -> u64 {
        let start: usize = self.lengths[..i - 1].iter().sum();
        ground_mask(self.lengths[i - 1]) << start
    }

    pub fn interval(&self, i: usize) -> SubsetWord {
        SubsetWord::from_bits_unchecked(self.n, self.interval_mask(i))
    }

    fn check_set(&self, a: &SubsetWord) -> Result<()> {
        if a.ground() != self.n {
            return Err(Error::GroundMismatch(a.ground(), self.n));
        }
        Ok(())
    }

    /// `|A ∩ I_i| >= |I_i|/2 + d`.
    fn heavy(&self, a: u64, i: usize) -> bool {
        2 * (a & self.interval_mask(i)).count_ones() as usize >= self.lengths[i - 1] + 2 * self.d
    }
}

/// One run of the interval process.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrialOutcome {
    pub t: SubsetWord,
    /// Intervals (1-indexed) with at least `d` elements outside `T`.
    pub j: Vec<usize>,
    /// `A_i = T ∪ S_i` for `i ∈ J`, `None` otherwise.
    pub sets: Vec<Option<SubsetWord>>,
    /// Number of `i ∈ J` with `A_i` in the family.
    pub hits: usize,
}

/// Draws `T` uniform of size `n/2 - d`, then for each interval `I_i` with
/// `|I_i \ T| >= d` a uniform `d`-subset `S_i` of `I_i \ T`.
///
/// For an interval-pattern-free family at most one `A_i` lies in it;
/// a second hit is reported as [`Error::FreenessViolated`].
pub fn interval_process_trial<F>(cfg: &IntervalProcessConfig, family: F, rng: &mut Rng) -> Result<TrialOutcome>
where
    F: Fn(&SubsetWord) -> bool,
{
    let t = random_subset(rng, cfg.n, cfg.n / 2 - cfg.d);
    let mut j = Vec::new();
    let mut sets = Vec::with_capacity(cfg.intervals());
    let mut hits = 0;
    for i in 1..=cfg.intervals() {
        let free = cfg.interval_mask(i) & !t.bits();
        if (free.count_ones() as usize) < cfg.d {
            sets.push(None);
            continue;
        }
        j.push(i);
        let s = random_subset_of(rng, free, cfg.d);
        let a = SubsetWord::from_bits_unchecked(cfg.n, t.bits() | s);
        hits += usize::from(family(&a));
        sets.push(Some(a));
    }
    if hits > 1 {
        return Err(Error::FreenessViolated(hits));
    }
    Ok(TrialOutcome { t, j, sets, hits })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProcessSummary {
    pub trials: u64,
    /// Trials with exactly one hit.
    pub hit_trials: u64,
    /// How often each interval landed in `J`.
    pub j_counts: Vec<u64>,
}

impl ProcessSummary {
    /// Empirical mean of the number of hits, which is at most 1.
    pub fn mean_hits(&self) -> f64 {
        self.hit_trials as f64 / self.trials as f64
    }
}

/// Runs `trials` independent trials; trial `t` uses stream `t` of `seed`.
pub fn run_interval_process<F>(
    cfg: &IntervalProcessConfig,
    family: F,
    trials: u64,
    seed: u64,
    exec: Exec,
) -> Result<ProcessSummary>
where
    F: Fn(&SubsetWord) -> bool + Sync + Send,
{
    let outcomes = exec::map_range(exec, trials as usize, |t| {
        interval_process_trial(cfg, &family, &mut rng(seed, t as u64))
    });
    let mut summary = ProcessSummary {
        trials,
        hit_trials: 0,
        j_counts: vec![0; cfg.intervals()],
    };
    for out in outcomes {
        let out = out?;
        summary.hit_trials += out.hits as u64;
        for i in out.j {
            summary.j_counts[i - 1] += 1;
        }
    }
    Ok(summary)
}

fn ratio(num: BigUint, den: BigUint) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Exact `P(i ∈ J)`: a hypergeometric tail in `|I_i ∩ T|`.
pub fn j_probability(cfg: &IntervalProcessConfig, i: usize) -> BigRational {
    let (n, l, t) = (cfg.n as u64, cfg.interval_len(i) as u64, (cfg.n / 2 - cfg.d) as u64);
    let num: BigUint = (0..=l - cfg.d as u64)
        .filter(|&x| x <= t)
        .map(|x| binomial(l, x) * binomial(n - l, t - x))
        .sum();
    ratio(num, binomial(n, t))
}

/// Exact `P(A_i = A | i ∈ J)` for `A` in the middle layer.
///
/// Each `d`-subset `S` of `A ∩ I_i` gives the same chance: `T = A \ S`
/// has probability `1/C(n, n/2-d)` and then `S` is picked with probability
/// `1/C(|I_i \ T|, d)`.
pub fn conditional_set_probability(cfg: &IntervalProcessConfig, i: usize, a: &SubsetWord) -> Result<BigRational> {
    cfg.check_set(a)?;
    if a.len() != cfg.n / 2 {
        return Err(Error::LayerMismatch(a.len()));
    }
    let (d, l) = (cfg.d as u64, cfg.interval_len(i) as u64);
    let inside = (a.bits() & cfg.interval_mask(i)).count_ones() as u64;
    if inside < d {
        return Ok(BigRational::zero());
    }
    let n = cfg.n as u64;
    let ways = binomial(inside, d);
    let each = binomial(n, n / 2 - d) * binomial(l - inside + d, d);
    Ok(ratio(ways, each) / j_probability(cfg, i))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalCheck {
    /// Middle-layer sets (over all intervals) meeting `|A ∩ I_i| >= |I_i|/2 + d`.
    pub qualifying: u64,
    /// Smallest `C(n, n/2) · P(A_i = A | i ∈ J)` over qualifying sets.
    pub min_scaled_qualifying: Option<BigRational>,
    /// The same minimum over all reachable middle-layer sets.
    pub min_scaled_reachable: BigRational,
}

impl ConditionalCheck {
    /// Every qualifying set is at least as likely as under the uniform law.
    pub fn holds(&self) -> bool {
        self.min_scaled_qualifying.as_ref().is_none_or(|v| *v >= BigRational::one())
    }
}

/// Compares `P(A_i = A | i ∈ J)` with `1/C(n, n/2)` over the whole middle
/// layer.
pub fn conditional_probability_check(cfg: &IntervalProcessConfig) -> Result<ConditionalCheck> {
    let n = cfg.n;
    let central = BigRational::from_integer(BigInt::from(binomial(n as u64, n as u64 / 2)));
    let mut qualifying = 0;
    let mut min_q: Option<BigRational> = None;
    let mut min_all: Option<BigRational> = None;
    for i in 1..=cfg.intervals() {
        // the probability depends on A only through |A ∩ I_i|
        let l = cfg.interval_len(i);
        for inside in cfg.d..=l.min(n / 2) {
            if n / 2 - inside > n - l {
                continue;
            }
            let mask = cfg.interval_mask(i);
            let bits = lowest_bits(mask, inside) | lowest_bits(!mask & ground_mask(n), n / 2 - inside);
            let a = SubsetWord::from_bits_unchecked(n, bits);
            let scaled = conditional_set_probability(cfg, i, &a)? * &central;
            let count = binomial(l as u64, inside as u64) * binomial((n - l) as u64, (n / 2 - inside) as u64);
            if 2 * inside >= l + 2 * cfg.d {
                qualifying += u64::try_from(count).unwrap_or(u64::MAX);
                if min_q.as_ref().is_none_or(|m| scaled < *m) {
                    min_q = Some(scaled.clone());
                }
            }
            if min_all.as_ref().is_none_or(|m| scaled < *m) {
                min_all = Some(scaled);
            }
        }
    }
    Ok(ConditionalCheck {
        qualifying,
        min_scaled_qualifying: min_q,
        min_scaled_reachable: min_all.unwrap_or_else(BigRational::zero),
    })
}

/// The `count` lowest set bits of `mask`.
fn lowest_bits(mut mask: u64, count: usize) -> u64 {
    let mut out = 0;
    for _ in 0..count {
        let low = mask & mask.wrapping_neg();
        out |= low;
        mask ^= low;
    }
    out
}

/// `G(A)`: intervals with `|A ∩ I_i| >= |I_i|/2 + d`.
pub fn g_statistic(a: &SubsetWord, cfg: &IntervalProcessConfig) -> Result<usize> {
    cfg.check_set(a)?;
    Ok((1..=cfg.intervals()).filter(|&i| cfg.heavy(a.bits(), i)).count())
}

/// `hist[g]` counts middle-layer sets with `G(A) = g`, by enumeration.
pub fn g_histogram(cfg: &IntervalProcessConfig, exec: Exec) -> Vec<u64> {
    let n = cfg.n;
    let words: Vec<u64> = KSubsets::new(n, n / 2).collect();
    let gs = exec::map(exec, &words, |&w| (1..=cfg.intervals()).filter(|&i| cfg.heavy(w, i)).count());
    let mut hist = vec![0; cfg.intervals() + 1];
    for g in gs {
        hist[g] += 1;
    }
    hist
}

/// Exact `P(X_i = 0)` for `A` uniform in the middle layer, where `X_i = 1`
/// iff `|A ∩ I_i| > |I_i|/2 + d`.
pub fn x_zero_probability(cfg: &IntervalProcessConfig, i: usize) -> BigRational {
    let (n, l, d) = (cfg.n as u64, cfg.interval_len(i) as u64, cfg.d as u64);
    let half = n / 2;
    let num: BigUint = (0..=l.min(half))
        .filter(|&j| 2 * j <= l + 2 * d && half - j <= n - l)
        .map(|j| binomial(l, j) * binomial(n - l, half - j))
        .sum();
    ratio(num, binomial(n, half))
}

/// `{A' ⊆ T : |A'| = l, A' ∪ U ∈ F}`, relabelled onto `[|T|]` in order.
pub fn restrict_family(family: &[SubsetWord], t: &SubsetWord, u: &SubsetWord, l: usize) -> Result<Vec<SubsetWord>> {
    t.check_ground(u)?;
    if !t.is_disjoint(u) {
        return Err(Error::OverlappingSupports);
    }
    if t.is_empty() {
        return Err(Error::param("restriction support T is empty"));
    }
    let k = u.len() + l;
    let mut out = Vec::new();
    for a in family {
        a.check_ground(t)?;
        if a.len() != k {
            return Err(Error::LayerMismatch(a.len()));
        }
        if a.bits() & !t.bits() == u.bits() {
            out.push(SubsetWord::from_bits_unchecked(t.len(), extract_bits(a.bits(), t.bits())));
        }
    }
    out.sort();
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    /// Three standard errors.
    pub radius: f64,
    pub trials: u64,
}

impl Estimate {
    fn from_samples(xs: &[f64]) -> Self {
        let t = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / t;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / t;
        Self {
            mean,
            radius: 3.0 * (var / t).sqrt(),
            trials: xs.len() as u64,
        }
    }

    pub fn covers(&self, value: f64) -> bool {
        (self.mean - value).abs() <= self.radius
    }
}

/// Shape of a restriction: `F ⊆ C([n], k)`, `|T| = m`, restricted layer `l`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RestrictionShape {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub l: usize,
}

impl RestrictionShape {
    fn validate(&self, family: &[SubsetWord]) -> Result<()> {
        let RestrictionShape { n, k, m, l } = *self;
        if n == 0 || n > MAX_GROUND || m == 0 || m > n || l > m || l > k || k - l > n - m {
            return Err(Error::param(format!("invalid restriction shape {self:?}")));
        }
        for a in family {
            if a.ground() != n {
                return Err(Error::GroundMismatch(a.ground(), n));
            }
            if a.len() != k {
                return Err(Error::LayerMismatch(a.len()));
            }
        }
        Ok(())
    }
}

/// Mean density of `F` restricted to a uniform `T ∈ C([n], m)` and a
/// uniform `U ∈ C([n] \ T, k - l)`.
pub fn sampled_restriction_density(
    family: &[SubsetWord],
    shape: RestrictionShape,
    trials: u64,
    seed: u64,
    exec: Exec,
) -> Result<Estimate> {
    shape.validate(family)?;
    if trials == 0 {
        return Err(Error::param("need at least one trial"));
    }
    let words: Vec<u64> = family.iter().map(|a| a.bits()).collect();
    let layer = rational_to_f64(&ratio(binomial(shape.m as u64, shape.l as u64), BigUint::one()));
    let xs = exec::map_range(exec, trials as usize, |i| {
        let mut r = rng(seed, i as u64);
        let t = random_subset(&mut r, shape.n, shape.m).bits();
        let u = random_subset_of(&mut r, ground_mask(shape.n) & !t, shape.k - shape.l);
        words.iter().filter(|&&a| a & !t == u).count() as f64 / layer
    });
    Ok(Estimate::from_samples(&xs))
}

/// The same mean computed over every pair `(T, U)`.
pub fn exact_restriction_mean(family: &[SubsetWord], shape: RestrictionShape) -> Result<BigRational> {
    shape.validate(family)?;
    if shape.n > 20 {
        return Err(Error::param("exact restriction means are limited to n <= 20"));
    }
    let words: Vec<u64> = family.iter().map(|a| a.bits()).collect();
    let mut total = BigUint::zero();
    let mut pairs = BigUint::zero();
    for t in KSubsets::new(shape.n, shape.m) {
        let rest = ground_mask(shape.n) & !t;
        for u in KSubsets::new(shape.n - shape.m, shape.k - shape.l) {
            let u = deposit_bits(u, rest);
            total += words.iter().filter(|&&a| a & !t == u).count();
            pairs += 1u32;
        }
    }
    Ok(ratio(total, pairs * binomial(shape.m as u64, shape.l as u64)))
}

/// Spreads the low bits of `word` onto the positions set in `mask`.
fn deposit_bits(word: u64, mask: u64) -> u64 {
    let mut out = 0;
    for (k, pos) in crate::patterns::BitIter(mask).enumerate() {
        if word >> k & 1 == 1 {
            out |= 1 << pos;
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConcentrationReport {
    pub n: usize,
    pub m: usize,
    pub threshold: f64,
    /// `E|T(A)| = (n/m) · m / 2^m`.
    pub mean: f64,
    /// Empirical `P(|T(A)| <= threshold · mean)`.
    pub empirical: Estimate,
    /// The same probability, exactly.
    pub exact: BigRational,
    /// `exp(-n / 2^{m+1})`.
    pub stated_bound: f64,
    /// `exp(-(1 - threshold)² · mean / 2)`.
    pub chernoff_bound: f64,
}

impl ConcentrationReport {
    pub fn stated_holds(&self) -> bool {
        rational_to_f64(&self.exact) <= self.stated_bound
    }

    pub fn chernoff_holds(&self) -> bool {
        rational_to_f64(&self.exact) <= self.chernoff_bound
    }
}

/// Lower tail of the number of singly hit length-`m` intervals of a
/// uniform `A ⊆ [n]`. The count is binomial with `n/m` trials of success
/// probability `m / 2^m`.
pub fn concentration_check(
    n: usize,
    m: usize,
    threshold: f64,
    trials: u64,
    seed: u64,
    exec: Exec,
) -> Result<ConcentrationReport> {
    if n == 0 || n > MAX_GROUND || m == 0 || n % m != 0 {
        return Err(Error::IndivisibleGround { n, m });
    }
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::param(format!("threshold {threshold} outside (0, 1)")));
    }
    if trials == 0 {
        return Err(Error::param("need at least one trial"));
    }
    let k = (n / m) as u64;
    let mean = k as f64 * m as f64 / 2f64.powi(m as i32);
    let cut = (threshold * mean).floor() as u64;
    let xs = exec::map_range(exec, trials as usize, |t| {
        let bits = rng(seed, t as u64).gen::<u64>() & ground_mask(n);
        let a = SubsetWord::from_bits_unchecked(n, bits);
        f64::from(u8::from(singleton_hits(&a, m).expect("m divides n") as u64 <= cut))
    });
    let hit = BigUint::from(m);
    let miss = (BigUint::one() << m) - &hit;
    let num: BigUint = (0..=cut.min(k))
        .map(|j| binomial(k, j) * hit.pow(j as u32) * miss.pow((k - j) as u32))
        .sum();
    Ok(ConcentrationReport {
        n,
        m,
        threshold,
        mean,
        empirical: Estimate::from_samples(&xs),
        exact: ratio(num, BigUint::one() << n),
        stated_bound: (-(n as f64) / 2f64.powi(m as i32 + 1)).exp(),
        chernoff_bound: (-(1.0 - threshold).powi(2) * mean / 2.0).exp(),
    })
}
