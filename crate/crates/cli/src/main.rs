use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use patternlab::bounds::{
    base_delta1, recursive_delta_bound, thm1_bound, thm2_bound, thm3_bound, THM2_DEFAULT_CONSTANT,
    THM3_DEFAULT_CONSTANT,
};
use patternlab::constructions::{read_family, FamilySpec};
use patternlab::extremal::{Budget, SolveOptions};
use patternlab::harness::{
    run_comparison, run_exact_table, run_simulation, write_bounds, write_statistics, FamilySource, KRule, PatternKind,
    ResultCache, SimulationConfig, TableConfig,
};
use patternlab::patterns::is_p_free;
use patternlab::walks::{count_walks, count_walks_hitting, reflection_identity_check, WalkSpec};
use patternlab::{Exec, Pattern};

#[derive(Parser, Debug)]
#[command(name = "patternlab", version, about = "Extremal numbers, constructions and bounds for pattern-free set families")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Results cache (one JSON record per line).
    #[arg(long, global = true, env = "PATTERNLAB_CACHE", default_value = "patternlab-cache.jsonl")]
    cache: PathBuf,

    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Branch-node budget per exact instance.
    #[arg(long, global = true)]
    budget_nodes: Option<u64>,

    /// Wall-clock budget per exact instance, in seconds.
    #[arg(long, global = true)]
    budget_secs: Option<f64>,

    /// Run on a single thread.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact f(n, k, P) for one instance.
    Exact {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, allow_hyphen_values = true)]
        pattern: String,
    },
    /// Build a construction and report its size, or list its members.
    Construct(ConstructArgs),
    /// Evaluate the upper bounds.
    Bound {
        #[arg(long)]
        k: u64,
        #[arg(long)]
        d: usize,
        /// Also evaluate the recursive bound for this pattern.
        #[arg(long, allow_hyphen_values = true)]
        pattern: Option<String>,
        /// Ground size for the asymptotic bounds.
        #[arg(long)]
        n: Option<u64>,
    },
    /// Lattice walk counts.
    Walks {
        #[command(subcommand)]
        command: WalksCommand,
    },
    /// Run the interval process on a family.
    Simulate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Construction name or full family spec; the best sum-residue
        /// family when neither this nor --family is given.
        #[arg(long, conflicts_with = "family")]
        construction: Option<String>,
        /// Family file with a `# family` or `# ground n` header.
        #[arg(long)]
        family: Option<PathBuf>,
    },
    /// Tables of exact values or comparisons.
    Table {
        #[command(subcommand)]
        command: TableCommand,
    },
}

#[derive(Args, Debug)]
struct ConstructArgs {
    /// parity, transversal, sum-residue, sum-window, bounded-discrepancy,
    /// cts, or a full family spec.
    #[arg(long)]
    construction: String,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    variant: Option<u8>,
    /// Defaults to the largest residue class.
    #[arg(long)]
    residue: Option<u64>,
    /// Window center, e.g. 11/2; defaults to the mean element sum.
    #[arg(long)]
    center: Option<String>,
    /// Fixed part S of a CTS family, as an element list.
    #[arg(long)]
    s: Option<String>,
    /// Free part T of a CTS family, as an element list.
    #[arg(long)]
    t: Option<String>,
    /// Pattern to check freeness against; the claimed one by default.
    #[arg(long, allow_hyphen_values = true)]
    pattern: Option<String>,
    /// Write the members instead of a summary.
    #[arg(long)]
    members: bool,
}

#[derive(Subcommand, Debug)]
enum WalksCommand {
    /// Count walks from --start to --end within [--lo, --hi].
    Count {
        #[arg(long)]
        length: usize,
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        start: i64,
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        end: i64,
        #[arg(long, allow_hyphen_values = true)]
        lo: Option<i64>,
        #[arg(long, allow_hyphen_values = true)]
        hi: Option<i64>,
        /// Also count walks touching this level.
        #[arg(long, allow_hyphen_values = true)]
        hit: Option<i64>,
    },
}

#[derive(Subcommand, Debug)]
enum TableCommand {
    /// Exact values over a grid of instances.
    Exact {
        /// Comma-separated ground sizes.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        /// half, all, or a fixed layer.
        #[arg(long, default_value = "half")]
        k: String,
        /// Comma-separated patterns.
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        pattern: Vec<String>,
    },
    /// Constructions, exact optimum and bounds side by side.
    Compare {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        d: usize,
        /// IP or ALT.
        #[arg(long)]
        kind: String,
    },
}

enum Outcome {
    Done,
    Partial,
}

impl Cli {
    fn exec(&self) -> Exec {
        if self.sequential {
            Exec::Sequential
        } else {
            Exec::Parallel
        }
    }

    fn solve_options(&self) -> anyhow::Result<SolveOptions> {
        let mut budget = Budget::default();
        if let Some(nodes) = self.budget_nodes {
            budget.max_nodes = nodes;
        }
        if let Some(secs) = self.budget_secs {
            if !(secs.is_finite() && secs >= 0.0) {
                bail!("--budget-secs must be a nonnegative number");
            }
            budget.max_time = Some(Duration::from_secs_f64(secs));
        }
        Ok(SolveOptions {
            budget,
            exec: self.exec(),
            ..SolveOptions::default()
        })
    }

    fn output(&self) -> anyhow::Result<Box<dyn Write>> {
        Ok(match &self.out {
            Some(path) => Box::new(BufWriter::new(
                File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
            )),
            None => Box::new(io::stdout().lock()),
        })
    }

    fn cache(&self) -> anyhow::Result<ResultCache> {
        ResultCache::open(&self.cache).with_context(|| format!("cannot use cache {}", self.cache.display()))
    }
}

fn parse_pattern(text: &str) -> anyhow::Result<Pattern> {
    text.parse().with_context(|| format!("bad pattern {text:?}"))
}

fn require<T>(value: Option<T>, flag: &str) -> anyhow::Result<T> {
    value.with_context(|| format!("--{flag} is required for this construction"))
}

fn build_construction(args: &ConstructArgs) -> anyhow::Result<FamilySpec> {
    let name = args.construction.trim();
    if name.contains('=') {
        return Ok(name.parse()?);
    }
    let n = require(args.n, "n")?;
    let text = match name {
        "parity" => format!(
            "kind=parity n={n} m={} variant={}",
            require(args.m, "m")?,
            args.variant.unwrap_or(1)
        ),
        "transversal" => format!("kind=transversal n={n} k={}", require(args.k, "k")?),
        "sum-residue" => {
            let d = require(args.d, "d")?;
            match args.residue {
                Some(r) => format!("kind=sum-residue n={n} d={d} residue={r}"),
                None => return Ok(FamilySpec::best_residue(n, d)?.0),
            }
        }
        "sum-window" => {
            let center = match &args.center {
                Some(c) => c.clone(),
                None => format!("{}/4", n * (n + 1)),
            };
            format!("kind=sum-window n={n} d={} center={center}", require(args.d, "d")?)
        }
        "bounded-discrepancy" => format!("kind=bounded-discrepancy n={n} d={}", require(args.d, "d")?),
        "cts" => format!(
            "kind=cts n={n} S={} T={}",
            args.s.as_deref().unwrap_or("{}"),
            require(args.t.as_deref(), "t")?
        ),
        other => bail!("unknown construction {other:?}"),
    };
    Ok(text.parse()?)
}

fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    match &cli.command {
        Command::Exact { n, k, pattern } => {
            let cfg = TableConfig {
                ns: vec![*n],
                k_rule: KRule::Fixed(*k),
                patterns: vec![parse_pattern(pattern)?],
                solve: cli.solve_options()?,
            };
            let report = run_exact_table(&cfg, &mut cli.cache()?, cli.output()?)?;
            Ok(if report.exhausted > 0 { Outcome::Partial } else { Outcome::Done })
        }
        Command::Construct(args) => {
            let spec = build_construction(args)?;
            let mut out = cli.output()?;
            if args.members {
                spec.write_family(&mut out)?;
                out.flush()?;
                return Ok(Outcome::Done);
            }
            let pattern = match &args.pattern {
                Some(p) => Some(parse_pattern(p)?),
                None => spec.claimed_pattern(),
            };
            let size = spec.size();
            let mut rows = vec![("family".to_string(), spec.to_string()), ("size".into(), size.to_string())];
            if let (Some(k), Some(density)) = (spec.layer(), spec.density()) {
                rows.push(("layer".into(), k.to_string()));
                rows.push(("density".into(), format!("{}/{}", density.numer(), density.denom())));
            }
            if let Some(p) = pattern {
                rows.push(("pattern".into(), p.to_string()));
                match spec.materialize() {
                    Ok(members) => rows.push(("p_free".into(), is_p_free(&members, &p)?.to_string())),
                    Err(e) => rows.push(("p_free".into(), format!("unchecked: {e}"))),
                }
            }
            write_statistics(&rows, &mut out)?;
            Ok(Outcome::Done)
        }
        Command::Bound { k, d, pattern, n } => {
            let mut records = Vec::new();
            if *d == 1 {
                records.push(base_delta1(*k)?);
            }
            records.push(thm1_bound(*k, *d)?);
            if let Some(p) = pattern {
                let p = parse_pattern(p)?;
                if p.half_order() != Some(*d) {
                    bail!("pattern {p} is not balanced of order 2d = {}", 2 * d);
                }
                records.push(recursive_delta_bound(*k, &p)?.0);
            }
            if let Some(n) = n {
                for r in [thm2_bound(*n, *d, THM2_DEFAULT_CONSTANT), thm3_bound(*n, *d, THM3_DEFAULT_CONSTANT)] {
                    match r {
                        Ok(r) => records.push(r),
                        Err(e) => log::warn!("{e}"),
                    }
                }
            }
            write_bounds(&records, cli.output()?)?;
            Ok(Outcome::Done)
        }
        Command::Walks {
            command: WalksCommand::Count { length, start, end, lo, hi, hit },
        } => {
            let spec = WalkSpec {
                length: *length,
                start: *start,
                end: *end,
                lo: *lo,
                hi: *hi,
            };
            spec.validate()?;
            let mut rows = vec![("count".to_string(), count_walks(&spec).to_string())];
            if let Some(h) = hit {
                rows.push(("hitting".into(), count_walks_hitting(&spec, *h).to_string()));
                if lo.is_none() && hi.is_none() {
                    if let Ok(ok) = reflection_identity_check(&spec, *h) {
                        rows.push(("reflection_identity".into(), ok.to_string()));
                    }
                }
            }
            write_statistics(&rows, cli.output()?)?;
            Ok(Outcome::Done)
        }
        Command::Simulate {
            n,
            d,
            trials,
            seed,
            construction,
            family,
        } => {
            let source = match (construction, family) {
                (_, Some(path)) => {
                    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
                    FamilySource::Members(read_family(BufReader::new(file))?.1)
                }
                (Some(name), None) => FamilySource::Spec(build_construction(&ConstructArgs {
                    construction: name.clone(),
                    n: Some(*n),
                    d: Some(*d),
                    k: None,
                    m: None,
                    variant: None,
                    residue: None,
                    center: None,
                    s: None,
                    t: None,
                    pattern: None,
                    members: false,
                })?),
                (None, None) => FamilySource::Spec(FamilySpec::best_residue(*n, *d)?.0),
            };
            let cfg = SimulationConfig {
                n: *n,
                d: *d,
                trials: *trials,
                seed: *seed,
                exec: cli.exec(),
            };
            write_statistics(&run_simulation(&cfg, &source)?, cli.output()?)?;
            Ok(Outcome::Done)
        }
        Command::Table {
            command: TableCommand::Exact { n, k, pattern },
        } => {
            let cfg = TableConfig {
                ns: n.clone(),
                k_rule: k.parse()?,
                patterns: pattern.iter().map(|p| parse_pattern(p)).collect::<anyhow::Result<_>>()?,
                solve: cli.solve_options()?,
            };
            let report = run_exact_table(&cfg, &mut cli.cache()?, cli.output()?)?;
            log::info!("{} rows, {} solver calls", report.rows, report.solver_calls);
            Ok(if report.exhausted > 0 { Outcome::Partial } else { Outcome::Done })
        }
        Command::Table {
            command: TableCommand::Compare { n, d, kind },
        } => {
            let kind: PatternKind = kind.parse()?;
            let cmp = run_comparison(*n, *d, kind, &cli.solve_options()?, &mut cli.cache()?)?;
            cmp.write_csv(cli.output()?)?;
            Ok(if cmp.exhausted { Outcome::Partial } else { Outcome::Done })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Partial) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
