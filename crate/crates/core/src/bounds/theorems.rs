use std::fmt;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::One;
use serde::Serialize;

use super::arith::{rational_to_f64, ratio};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum BoundName {
    Thm1,
    Thm2,
    Thm3,
    Lemma22,
    Lemma23,
    #[serde(rename = "Base_d1")]
    BaseD1,
    Recursive,
}

impl fmt::Display for BoundName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundName::Thm1 => "Thm1",
            BoundName::Thm2 => "Thm2",
            BoundName::Thm3 => "Thm3",
            BoundName::Lemma22 => "Lemma22",
            BoundName::Lemma23 => "Lemma23",
            BoundName::BaseD1 => "Base_d1",
            BoundName::Recursive => "Recursive",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum BoundValue {
    Exact(BigRational),
    Approx(f64),
}

impl BoundValue {
    pub fn to_f64(&self) -> f64 {
        match self {
            BoundValue::Exact(r) => rational_to_f64(r),
            BoundValue::Approx(x) => *x,
        }
    }

    /// `p/q` for exact values, shortest round-trip decimal otherwise.
    pub fn render(&self) -> String {
        match self {
            BoundValue::Exact(r) => format!("{}/{}", r.numer(), r.denom()),
            BoundValue::Approx(x) => format!("{x:e}"),
        }
    }

    fn clamp(self) -> Self {
        match self {
            BoundValue::Exact(r) if r > BigRational::one() => BoundValue::Exact(BigRational::one()),
            BoundValue::Approx(x) if x > 1.0 || x.is_nan() => BoundValue::Approx(1.0),
            v => v,
        }
    }

    /// True iff this bound is at least the exact density `delta`.
    pub fn dominates(&self, delta: &BigRational) -> bool {
        match self {
            BoundValue::Exact(r) => r >= delta,
            BoundValue::Approx(x) => *x >= rational_to_f64(delta),
        }
    }
}

/// A named, parameterized bound on an extremal density.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundRecord {
    pub name: BoundName,
    pub n: Option<u64>,
    pub k: Option<f64>,
    pub d: Option<usize>,
    /// Remaining named parameters, in insertion order.
    pub params: Vec<(String, String)>,
    /// Clamped to `[0, 1]`.
    pub value: BoundValue,
    /// Whether the stated preconditions of the result hold for the inputs.
    pub valid: bool,
    /// The value stands for a statement whose constant hides `o(1)` terms;
    /// it is advisory, never a certified bound.
    pub asymptotic: bool,
}

pub const CSV_HEADER: [&str; 7] = ["name", "n", "k", "d", "params", "value", "asymptotic"];

pub(crate) fn format_k(k: f64) -> String {
    if k < 1e15 {
        format!("{}", k as u64)
    } else {
        format!("{k:e}")
    }
}

impl BoundRecord {
    fn new(name: BoundName, value: BoundValue) -> Self {
        Self {
            name,
            n: None,
            k: None,
            d: None,
            params: Vec::new(),
            value: value.clamp(),
            valid: true,
            asymptotic: false,
        }
    }

    pub(crate) fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.push((key.to_string(), value.to_string()));
        self
    }

    pub fn get_param(&self, key: &str) -> Option<&str> {
        self.params.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn value_f64(&self) -> f64 {
        self.value.to_f64()
    }

    /// The row `name,n,k,d,params,value,asymptotic`.
    pub fn csv_row(&self) -> [String; 7] {
        let params = self
            .params
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";");
        [
            self.name.to_string(),
            self.n.map(|n| n.to_string()).unwrap_or_default(),
            self.k.map(format_k).unwrap_or_default(),
            self.d.map(|d| d.to_string()).unwrap_or_default(),
            params,
            self.value.render(),
            self.asymptotic.to_string(),
        ]
    }
}

/// `a_d = (8d)^{5d}`.
pub fn a_d(d: usize) -> BigUint {
    BigUint::from(8 * d as u64).pow(5 * d as u32)
}

/// `c_d = 6d / 8^d`.
pub fn c_d(d: usize) -> BigRational {
    ratio(6 * d as u64, BigUint::from(8u32).pow(d as u32))
}

pub(crate) fn ln_a(d: usize) -> f64 {
    5.0 * d as f64 * (8.0 * d as f64).ln()
}

pub(crate) fn c_f64(d: usize) -> f64 {
    6.0 * d as f64 * 8f64.powi(-(d as i32))
}

/// `k` from which `a_d k^{-c_d} <= 1`, i.e. `a_d^{1/c_d}`, as a natural log.
pub fn ln_threshold(d: usize) -> f64 {
    ln_a(d) / c_f64(d)
}

/// `min(1, a_d k^{-c_d})`.
pub fn thm1_bound(k: u64, d: usize) -> Result<BoundRecord> {
    thm1_bound_real(k as f64, d)
}

/// [`thm1_bound`] for integer-valued `k` beyond `u64`, evaluated in the
/// log domain.
pub fn thm1_bound_real(k: f64, d: usize) -> Result<BoundRecord> {
    if k < 1.0 || d == 0 {
        return Err(Error::param(format!("thm1 needs k, d >= 1 (k = {k}, d = {d})")));
    }
    let value = (ln_a(d) - c_f64(d) * k.ln()).exp();
    let c = c_d(d);
    let mut rec = BoundRecord::new(BoundName::Thm1, BoundValue::Approx(value))
        .param("a_d", a_d(d))
        .param("c_d", format!("{}/{}", c.numer(), c.denom()));
    rec.k = Some(k);
    rec.d = Some(d);
    Ok(rec)
}

/// The `d = 1` base case: `δ(k, 1) <= 1/k`.
pub fn base_delta1(k: u64) -> Result<BoundRecord> {
    if k == 0 {
        return Err(Error::param("base case needs k >= 1"));
    }
    let mut rec = BoundRecord::new(BoundName::BaseD1, BoundValue::Exact(ratio(1u64, k)));
    rec.k = Some(k as f64);
    rec.d = Some(1);
    Ok(rec)
}

/// Lower end of the admissible `γ` interval, `16 ln k / sqrt(k)`.
pub fn lemma22_gamma_min(k: f64) -> f64 {
    16.0 * k.ln() / k.sqrt()
}

/// Size `⌈γ² k / 64⌉` of the shrunken instance.
pub fn lemma22_inner_k(k: f64, gamma: f64) -> f64 {
    (gamma * gamma * k / 64.0).ceil().max(1.0)
}

/// `max(γ, 6 sqrt(δ_inner))`, clamped, where `δ_inner` bounds the density
/// at the shrunken size [`lemma22_inner_k`] for the pattern with its end
/// signs removed.
pub fn lemma22_bound(k: u64, gamma: f64, delta_inner: f64) -> Result<BoundRecord> {
    lemma22_bound_real(k as f64, gamma, delta_inner)
}

pub fn lemma22_bound_real(k: f64, gamma: f64, delta_inner: f64) -> Result<BoundRecord> {
    let lo = lemma22_gamma_min(k);
    if !(gamma >= lo && gamma <= 1.0) {
        return Err(Error::GammaOutOfRange { gamma, lo });
    }
    if !(0.0..=1.0).contains(&delta_inner) {
        return Err(Error::param(format!("inner density {delta_inner} outside [0, 1]")));
    }
    let value = gamma.max(6.0 * delta_inner.sqrt());
    let mut rec = BoundRecord::new(BoundName::Lemma22, BoundValue::Approx(value))
        .param("gamma", gamma)
        .param("inner_k", format_k(lemma22_inner_k(k, gamma)))
        .param("delta_inner", delta_inner);
    rec.k = Some(k);
    Ok(rec)
}

/// `max(2e^{-k1/12}, 4 δ1, 4 (3 k1)^{2 d1} δ2)`, clamped, for a split
/// `2 k1 + k2 = k`, `d1 + d2 = d`. The mirrored form (`k1 + 2 k2 = k`) is
/// the same expression with the roles of the two halves exchanged.
pub fn lemma23_bound(k1: u64, k2: u64, d1: usize, d2: usize, delta1: f64, delta2: f64) -> Result<BoundRecord> {
    lemma23_bound_real(k1 as f64, k2 as f64, d1, d2, delta1, delta2)
}

pub fn lemma23_bound_real(k1: f64, k2: f64, d1: usize, d2: usize, delta1: f64, delta2: f64) -> Result<BoundRecord> {
    if k1 < 1.0 || k2 < 1.0 || d1 == 0 || d2 == 0 {
        return Err(Error::BadSplit(format!("k1 = {k1}, k2 = {k2}, d1 = {d1}, d2 = {d2}")));
    }
    for delta in [delta1, delta2] {
        if !(0.0..=1.0).contains(&delta) {
            return Err(Error::param(format!("density {delta} outside [0, 1]")));
        }
    }
    let tail = 2.0 * (-k1 / 12.0).exp();
    let first = 4.0 * delta1;
    // (3 k1)^{2 d1} δ2 in the log domain; δ2 = 0 gives 0
    let second = if delta2 == 0.0 {
        0.0
    } else {
        (4f64.ln() + 2.0 * d1 as f64 * (3.0 * k1).ln() + delta2.ln()).exp()
    };
    let value = tail.max(first).max(second);
    let mut rec = BoundRecord::new(BoundName::Lemma23, BoundValue::Approx(value))
        .param("k1", format_k(k1))
        .param("k2", format_k(k2))
        .param("d1", d1)
        .param("d2", d2);
    rec.k = Some(2.0 * k1 + k2);
    rec.d = Some(d1 + d2);
    Ok(rec)
}

pub const THM2_DEFAULT_CONSTANT: f64 = 80.0;
pub const THM3_DEFAULT_CONSTANT: f64 = 2.0;

/// `C d² / n` for `δ(n, n/2, IP(d))`, valid in the regime `8 d² <= n`.
/// Asymptotic: the constant is reconstructed, not certified.
pub fn thm2_bound(n: u64, d: usize, constant: f64) -> Result<BoundRecord> {
    let d2 = (d as u64).pow(2);
    if d == 0 || 8 * d2 > n {
        return Err(Error::RegimeViolation(format!("thm2 needs 8d^2 <= n (n = {n}, d = {d})")));
    }
    let m = n / (8 * d2);
    let value = constant * d2 as f64 / n as f64;
    let mut rec = BoundRecord::new(BoundName::Thm2, BoundValue::Approx(value))
        .param("C", constant)
        .param("m", m);
    rec.n = Some(n);
    rec.k = Some((n / 2) as f64);
    rec.d = Some(d);
    rec.asymptotic = true;
    Ok(rec)
}

/// `m = ⌊log₂(n / d²) / 2⌋`, computed exactly.
pub fn thm3_interval_length(n: u64, d: usize) -> u64 {
    let d2 = (d as u128).pow(2);
    let mut j = 0u64;
    while d2 << (j + 1) <= n as u128 {
        j += 1;
    }
    j / 2
}

/// `C / m` for `δ(n, n/2, ALT(d))` with `m = ⌊log₂(n/d²)/2⌋`, valid for
/// `d² < n` and `m >= 1`. Asymptotic.
pub fn thm3_bound(n: u64, d: usize, constant: f64) -> Result<BoundRecord> {
    let d2 = (d as u64).pow(2);
    if d == 0 || d2 >= n {
        return Err(Error::RegimeViolation(format!("thm3 needs d^2 < n (n = {n}, d = {d})")));
    }
    let m = thm3_interval_length(n, d);
    if m == 0 {
        return Err(Error::RegimeViolation(format!(
            "thm3 needs log2(n/d^2) >= 2 (n = {n}, d = {d})"
        )));
    }
    let mut rec = BoundRecord::new(BoundName::Thm3, BoundValue::Approx(constant / m as f64))
        .param("C", constant)
        .param("m", m);
    rec.n = Some(n);
    rec.k = Some((n / 2) as f64);
    rec.d = Some(d);
    rec.asymptotic = true;
    Ok(rec)
}
