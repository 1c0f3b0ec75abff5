//! Experiment plumbing: the results cache, exact tables, comparison tables
//! and simulation summaries, all emitted as CSV.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};

use crate::bounds::{
    base_delta1, binomial, rational_to_f64, recursive_delta_bound, thm1_bound, thm2_bound, thm3_bound, BoundRecord,
    BoundValue, CSV_HEADER as BOUND_HEADER, THM2_DEFAULT_CONSTANT, THM3_DEFAULT_CONSTANT,
};
use crate::constructions::FamilySpec;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::extremal::{extremal_number_with, ExtremalResult, SolveOptions};
use crate::patterns::{Pattern, SubsetWord};
use crate::stochastic::{j_probability, run_interval_process, IntervalProcessConfig};

pub type CacheKey = (usize, usize, Pattern);

/// Exact results keyed by `(n, k, pattern)`, backed by an append-only file
/// of one JSON record per line. Later lines win.
#[derive(Debug, Default)]
pub struct ResultCache {
    path: Option<PathBuf>,
    entries: HashMap<CacheKey, ExtremalResult>,
    skipped: usize,
}

impl ResultCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Loads `path` if it exists and checks that it can be appended to.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        OpenOptions::new().create(true).append(true).open(&path)?;
        let mut cache = Self::load(BufReader::new(File::open(&path)?))?;
        cache.path = Some(path);
        Ok(cache)
    }

    /// Reads records, skipping (and logging) lines that do not parse.
    pub fn load<R: BufRead>(reader: R) -> Result<Self> {
        let mut cache = Self::default();
        for (no, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            match ExtremalResult::from_json_line(&line) {
                Ok(r) => {
                    cache.entries.insert((r.n, r.k, r.pattern), r);
                }
                Err(e) => {
                    log::warn!("skipping cache line {}: {e}", no + 1);
                    cache.skipped += 1;
                }
            }
        }
        Ok(cache)
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn get(&self, n: usize, k: usize, pattern: &Pattern) -> Option<&ExtremalResult> {
        self.entries.get(&(n, k, *pattern))
    }

    pub fn insert(&mut self, result: ExtremalResult) -> Result<()> {
        if let Some(path) = &self.path {
            let mut file = OpenOptions::new().create(true).append(true).open(path)?;
            writeln!(file, "{}", result.to_json_line())?;
        }
        self.entries.insert((result.n, result.k, result.pattern), result);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Corrupt lines ignored while loading.
    pub fn skipped(&self) -> usize {
        self.skipped
    }
}

/// Outcome of a cached solve.
#[derive(Debug)]
pub enum Solved {
    Cached(ExtremalResult),
    Computed(ExtremalResult),
    /// The budget ran out; holds the best family found and a dual bound.
    Partial { best: ExtremalResult, upper_bound: usize },
}

impl Solved {
    pub fn result(&self) -> &ExtremalResult {
        match self {
            Solved::Cached(r) | Solved::Computed(r) => r,
            Solved::Partial { best, .. } => best,
        }
    }
}

/// Looks `(n, k, pattern)` up in the cache and solves it otherwise. Only
/// certified optima are cached.
pub fn solve_cached(n: usize, k: usize, pattern: &Pattern, opts: &SolveOptions, cache: &mut ResultCache) -> Result<Solved> {
    if let Some(r) = cache.get(n, k, pattern) {
        return Ok(Solved::Cached(r.clone()));
    }
    match extremal_number_with(n, k, pattern, opts) {
        Ok(r) => {
            cache.insert(r.clone())?;
            Ok(Solved::Computed(r))
        }
        Err(Error::BudgetExhausted { upper_bound, partial, .. }) => Ok(Solved::Partial {
            best: *partial,
            upper_bound,
        }),
        Err(e) => Err(e),
    }
}

fn render_ratio(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn density(size: impl Into<BigInt>, n: usize, k: usize) -> BigRational {
    BigRational::new(size.into(), BigInt::from(binomial(n as u64, k as u64)))
}

/// Which layers a table visits for each `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KRule {
    Half,
    Fixed(usize),
    All,
}

impl KRule {
    fn layers(self, n: usize) -> Result<Vec<usize>> {
        match self {
            KRule::Half if n % 2 == 0 => Ok(vec![n / 2]),
            KRule::Half => Err(Error::param(format!("k = n/2 needs even n, got {n}"))),
            KRule::Fixed(k) if k <= n => Ok(vec![k]),
            KRule::Fixed(k) => Err(Error::param(format!("k = {k} exceeds n = {n}"))),
            KRule::All => Ok((0..=n).collect()),
        }
    }
}

impl FromStr for KRule {
    type Err = Error;

    /// `half`, `all`, or a fixed layer.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "half" => Ok(KRule::Half),
            "all" => Ok(KRule::All),
            t => t
                .parse()
                .map(KRule::Fixed)
                .map_err(|_| Error::param(format!("bad layer rule {s:?}"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TableConfig {
    pub ns: Vec<usize>,
    pub k_rule: KRule,
    pub patterns: Vec<Pattern>,
    pub solve: SolveOptions,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TableReport {
    pub rows: usize,
    pub solver_calls: usize,
    pub exhausted: usize,
}

pub const TABLE_HEADER: [&str; 8] = ["n", "k", "pattern", "f", "delta", "nodes", "ms", "status"];

/// One row per `(n, k, pattern)`. Exhausted rows report the best family
/// found and the status `exhausted<=U`.
pub fn run_exact_table<W: Write>(cfg: &TableConfig, cache: &mut ResultCache, out: W) -> Result<TableReport> {
    if cfg.ns.is_empty() || cfg.patterns.is_empty() {
        return Err(Error::param("table needs at least one n and one pattern"));
    }
    let mut instances = Vec::new();
    for &n in &cfg.ns {
        for k in cfg.k_rule.layers(n)? {
            for p in &cfg.patterns {
                instances.push((n, k, *p));
            }
        }
    }
    let mut csv = csv::Writer::from_writer(out);
    csv.write_record(TABLE_HEADER)?;
    let mut report = TableReport::default();
    for (n, k, p) in instances {
        let solved = solve_cached(n, k, &p, &cfg.solve, cache)?;
        let status = match &solved {
            Solved::Cached(_) => "optimal".to_string(),
            Solved::Computed(_) => {
                report.solver_calls += 1;
                "optimal".to_string()
            }
            Solved::Partial { upper_bound, .. } => {
                report.solver_calls += 1;
                report.exhausted += 1;
                format!("exhausted<={upper_bound}")
            }
        };
        let r = solved.result();
        csv.write_record([
            n.to_string(),
            k.to_string(),
            p.to_string(),
            r.f.to_string(),
            render_ratio(&r.delta()),
            r.nodes.to_string(),
            r.ms.to_string(),
            status,
        ])?;
        report.rows += 1;
    }
    csv.flush()?;
    Ok(report)
}

/// The two pattern families compared against their constructions and
/// bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PatternKind {
    Interval,
    Alternating,
}

impl PatternKind {
    pub fn pattern(self, d: usize) -> Result<Pattern> {
        match self {
            PatternKind::Interval => Pattern::interval(d),
            PatternKind::Alternating => Pattern::alternating(d),
        }
    }
}

impl FromStr for PatternKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "IP" => Ok(PatternKind::Interval),
            "ALT" => Ok(PatternKind::Alternating),
            "" => Err(Error::param("empty pattern kind; use IP or ALT")),
            other => Err(Error::param(format!("unknown pattern kind {other:?}; use IP or ALT"))),
        }
    }
}

impl fmt::Display for PatternKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PatternKind::Interval => "IP",
            PatternKind::Alternating => "ALT",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    Construction,
    Exact,
    Bound,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Construction => "construction",
            Source::Exact => "exact",
            Source::Bound => "bound",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRow {
    pub source: Source,
    pub name: String,
    pub size: Option<String>,
    pub density: Option<BigRational>,
    pub params: String,
    pub value: Option<BoundValue>,
    pub valid: Option<bool>,
    pub asymptotic: bool,
    pub note: String,
}

impl ComparisonRow {
    fn bound(record: Result<BoundRecord>, name: &str, asymptotic: bool) -> Self {
        match record {
            Ok(r) => {
                let row = r.csv_row();
                Self {
                    source: Source::Bound,
                    name: row[0].clone(),
                    size: None,
                    density: None,
                    params: row[4].clone(),
                    value: Some(r.value),
                    valid: Some(r.valid),
                    asymptotic: r.asymptotic,
                    note: String::new(),
                }
            }
            Err(e) => Self {
                source: Source::Bound,
                name: name.to_string(),
                size: None,
                density: None,
                params: String::new(),
                value: None,
                valid: Some(false),
                asymptotic,
                note: e.to_string(),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub n: usize,
    pub d: usize,
    pub kind: PatternKind,
    pub pattern: Pattern,
    pub rows: Vec<ComparisonRow>,
    pub exhausted: bool,
}

impl Comparison {
    pub fn exact_density(&self) -> Option<&BigRational> {
        self.rows
            .iter()
            .find(|r| r.source == Source::Exact && r.note.is_empty())
            .and_then(|r| r.density.as_ref())
    }

    /// Construction densities sit below the exact density, which sits
    /// below every certified bound value.
    pub fn is_consistent(&self) -> bool {
        let Some(exact) = self.exact_density() else {
            return true;
        };
        self.rows.iter().all(|r| match r.source {
            Source::Construction => r.density.as_ref().is_none_or(|c| c <= exact),
            Source::Exact => true,
            Source::Bound => r.asymptotic || r.value.as_ref().is_none_or(|v| v.dominates(exact)),
        })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut csv = csv::Writer::from_writer(out);
        csv.write_record(COMPARISON_HEADER)?;
        let k = self.n / 2;
        for r in &self.rows {
            csv.write_record([
                r.source.to_string(),
                r.name.clone(),
                self.n.to_string(),
                k.to_string(),
                self.d.to_string(),
                self.pattern.to_string(),
                r.size.clone().unwrap_or_default(),
                r.density.as_ref().map(render_ratio).unwrap_or_default(),
                r.params.clone(),
                r.value.as_ref().map(BoundValue::render).unwrap_or_default(),
                r.valid.map(|v| v.to_string()).unwrap_or_default(),
                r.asymptotic.to_string(),
                r.note.clone(),
            ])?;
        }
        csv.flush()?;
        Ok(())
    }
}

pub const COMPARISON_HEADER: [&str; 13] = [
    "source", "name", "n", "k", "d", "pattern", "size", "density", "params", "value", "valid", "asymptotic", "note",
];

/// Constructions avoiding the interval pattern of order `2d` on the middle
/// layer of `[n]`.
fn interval_constructions(n: usize, d: usize) -> Vec<Result<FamilySpec>> {
    let mut out = vec![
        FamilySpec::best_residue(n, d).map(|(spec, _)| spec),
        FamilySpec::sum_window(n, d, Ratio::new((n * (n + 1)) as i64, 4)),
        FamilySpec::bounded_discrepancy(n, d),
    ];
    if d == 2 && n >= 2 {
        out.push(FamilySpec::transversal(n, n / 2));
    }
    out
}

/// Joins constructions, the exact optimum and the bounds on the middle
/// layer of `[n]` for the interval or alternating pattern of order `2d`.
pub fn run_comparison(
    n: usize,
    d: usize,
    kind: PatternKind,
    opts: &SolveOptions,
    cache: &mut ResultCache,
) -> Result<Comparison> {
    if n == 0 || n % 2 != 0 {
        return Err(Error::param(format!("comparison needs even n, got {n}")));
    }
    let pattern = kind.pattern(d)?;
    let k = n / 2;
    let mut rows = Vec::new();

    if kind == PatternKind::Interval {
        for spec in interval_constructions(n, d) {
            rows.push(match spec {
                Ok(spec) => {
                    let size = spec.size();
                    let name = spec.to_string();
                    ComparisonRow {
                        source: Source::Construction,
                        name: name.split_whitespace().next().unwrap_or_default().trim_start_matches("kind=").into(),
                        size: Some(size.to_string()),
                        density: Some(density(size, n, k)),
                        params: name.split_whitespace().skip(1).collect::<Vec<_>>().join(";"),
                        value: None,
                        valid: None,
                        asymptotic: false,
                        note: String::new(),
                    }
                }
                Err(e) => ComparisonRow {
                    source: Source::Construction,
                    name: String::new(),
                    size: None,
                    density: None,
                    params: String::new(),
                    value: None,
                    valid: None,
                    asymptotic: false,
                    note: e.to_string(),
                },
            });
        }
    }

    let mut exhausted = false;
    let exact = match solve_cached(n, k, &pattern, opts, cache) {
        Ok(Solved::Partial { best, upper_bound }) => {
            exhausted = true;
            ComparisonRow {
                source: Source::Exact,
                name: "f".into(),
                size: Some(best.f.to_string()),
                density: Some(best.delta()),
                params: format!("upper={upper_bound}"),
                value: None,
                valid: None,
                asymptotic: false,
                note: "budget exhausted".into(),
            }
        }
        Ok(solved) => ComparisonRow {
            source: Source::Exact,
            name: "f".into(),
            size: Some(solved.result().f.to_string()),
            density: Some(solved.result().delta()),
            params: String::new(),
            value: None,
            valid: None,
            asymptotic: false,
            note: String::new(),
        },
        Err(e) => ComparisonRow {
            source: Source::Exact,
            name: "f".into(),
            size: None,
            density: None,
            params: String::new(),
            value: None,
            valid: None,
            asymptotic: false,
            note: e.to_string(),
        },
    };
    rows.push(exact);

    let kk = k as u64;
    if d == 1 {
        rows.push(ComparisonRow::bound(base_delta1(kk), "Base_d1", false));
    }
    rows.push(ComparisonRow::bound(thm1_bound(kk, d), "Thm1", false));
    rows.push(ComparisonRow::bound(
        recursive_delta_bound(kk, &pattern).map(|(r, _)| r),
        "Recursive",
        false,
    ));
    match kind {
        PatternKind::Interval => rows.push(ComparisonRow::bound(
            thm2_bound(n as u64, d, THM2_DEFAULT_CONSTANT),
            "Thm2",
            true,
        )),
        PatternKind::Alternating => rows.push(ComparisonRow::bound(
            thm3_bound(n as u64, d, THM3_DEFAULT_CONSTANT),
            "Thm3",
            true,
        )),
    }
    Ok(Comparison {
        n,
        d,
        kind,
        pattern,
        rows,
        exhausted,
    })
}

/// Where the simulated family comes from.
#[derive(Clone, Debug)]
pub enum FamilySource {
    Spec(FamilySpec),
    Members(Vec<SubsetWord>),
}

impl FamilySource {
    fn membership(&self) -> Box<dyn Fn(&SubsetWord) -> bool + Sync + Send + '_> {
        match self {
            FamilySource::Spec(spec) => Box::new(move |a| spec.contains(a)),
            FamilySource::Members(m) => {
                let set: HashSet<u64> = m.iter().map(|a| a.bits()).collect();
                Box::new(move |a| set.contains(&a.bits()))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SimulationConfig {
    pub n: usize,
    pub d: usize,
    pub trials: u64,
    pub seed: u64,
    pub exec: Exec,
}

pub const STATISTICS_HEADER: [&str; 2] = ["statistic", "value"];

/// Runs the interval process and summarizes it, one statistic per row.
pub fn run_simulation(cfg: &SimulationConfig, family: &FamilySource) -> Result<Vec<(String, String)>> {
    if cfg.trials == 0 {
        return Err(Error::param("need at least one trial"));
    }
    let process = IntervalProcessConfig::new(cfg.n, cfg.d)?;
    let member = family.membership();
    let summary = run_interval_process(&process, member, cfg.trials, cfg.seed, cfg.exec)?;
    let t = cfg.trials as f64;
    let mut rows = vec![
        ("n".to_string(), cfg.n.to_string()),
        ("d".into(), cfg.d.to_string()),
        ("intervals".into(), process.intervals().to_string()),
        ("trials".into(), cfg.trials.to_string()),
        ("seed".into(), cfg.seed.to_string()),
        ("hit_trials".into(), summary.hit_trials.to_string()),
        ("mean_hits".into(), summary.mean_hits().to_string()),
    ];
    for i in 1..=process.intervals() {
        let p = summary.j_counts[i - 1] as f64 / t;
        let exact = j_probability(&process, i);
        rows.push((format!("j_frequency_{i}"), p.to_string()));
        rows.push((format!("j_radius_{i}"), (3.0 * (p * (1.0 - p) / t).sqrt()).to_string()));
        rows.push((format!("j_exact_{i}"), render_ratio(&exact)));
        rows.push((format!("j_exact_{i}_float"), rational_to_f64(&exact).to_string()));
    }
    Ok(rows)
}

pub fn write_bounds<W: Write>(records: &[BoundRecord], out: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(out);
    csv.write_record(BOUND_HEADER)?;
    for r in records {
        csv.write_record(r.csv_row())?;
    }
    csv.flush()?;
    Ok(())
}

pub fn write_statistics<W: Write>(rows: &[(String, String)], out: W) -> Result<()> {
    let mut csv = csv::Writer::from_writer(out);
    csv.write_record(STATISTICS_HEADER)?;
    for (k, v) in rows {
        csv.write_record([k, v])?;
    }
    csv.flush()?;
    Ok(())
}
