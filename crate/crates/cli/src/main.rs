use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use boolrg::counting::{margin_sweep, naive_adjustment_estimate, write_sweep_csv};
use boolrg::detector::{self, BoundParams, DecompositionReport};
use boolrg::families::{self, MajorityRule};
use boolrg::flow::{self, ClassifyConfig, ClassificationReport, NearPolynomialConfig, PhaseLabel, Subject};
use boolrg::rg::{DecimationOrder, OrderSampling};
use boolrg::{Error, SymmetricFunction, TruthTable, N_MAX};

const EXIT_FAILS_BOUND: u8 = 3;
const EXIT_CAPACITY: u8 = 4;

#[derive(Parser)]
#[command(name = "boolrg", version, about = "Decimation flows, phase labels and near-polynomial detection for Boolean functions")]
struct Cli {
    /// RNG seed; drawn from entropy (and printed to stderr) when omitted.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// JSON instead of CSV where a command supports both.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Density after each decimation step.
    Flow(FlowArgs),
    /// Phase label as a JSON report.
    Classify(ClassifyArgs),
    /// Polynomial-plus-sparse-remainder decomposition; exit 0 if the remainder
    /// meets the bound, 3 if not, 4 if the exhaustive search is over capacity.
    Detect(DetectArgs),
    /// Counting bounds: margin sweep as CSV, or the naive adjustment exponent.
    Count(CountArgs),
    /// Write a family member as a BFRG table.
    Gen(GenArgs),
    /// Flow of a symmetric function, at any arity.
    SymFlow(SymFlowArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Family {
    Parity,
    Majority,
    #[value(name = "mod_p")]
    ModP,
    Poly,
    Random,
    Planted,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Rule {
    Strict,
    AtLeastHalf,
}

impl From<Rule> for MajorityRule {
    fn from(r: Rule) -> Self {
        match r {
            Rule::Strict => MajorityRule::Strict,
            Rule::AtLeastHalf => MajorityRule::AtLeastHalf,
        }
    }
}

#[derive(Args, Clone)]
struct Source {
    #[arg(long, value_enum, required_unless_present = "file", conflicts_with = "file")]
    family: Option<Family>,
    /// BFRG table to read.
    #[arg(long)]
    file: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    /// Modulus for mod_p.
    #[arg(long, default_value_t = 3)]
    p: u32,
    /// Degree for poly and planted; also the degree bound for detect.
    #[arg(long)]
    xi: Option<usize>,
    /// One-density for random.
    #[arg(long, default_value_t = 0.5)]
    p0: f64,
    /// Coefficient density for poly.
    #[arg(long, default_value_t = 0.5)]
    term_density: f64,
    /// Bernoulli noise rate for planted.
    #[arg(long, conflicts_with = "flips")]
    noise: Option<f64>,
    /// Exact number of flipped outputs for planted (default 1).
    #[arg(long)]
    flips: Option<usize>,
    #[arg(long, value_enum, default_value = "strict")]
    majority_rule: Rule,
}

/// A loaded input: a full table, or a symmetric function too wide for one.
enum Input {
    Table(TruthTable),
    Symmetric(SymmetricFunction),
}

impl Source {
    fn arity(&self) -> anyhow::Result<usize> {
        self.n.context("--n is required for generated families")
    }

    fn xi(&self) -> anyhow::Result<usize> {
        self.xi.context("--xi is required for this family")
    }

    fn symmetric(&self) -> anyhow::Result<Option<SymmetricFunction>> {
        let n = self.arity()?;
        Ok(match self.family {
            Some(Family::Parity) => Some(SymmetricFunction::parity(n)),
            Some(Family::Majority) => Some(SymmetricFunction::majority(n, self.majority_rule.into())),
            Some(Family::ModP) => Some(SymmetricFunction::mod_p(n, self.p)?),
            _ => None,
        })
    }

    /// Full tables up to the table limit, the symmetric engine beyond it.
    fn load(&self, seed: u64) -> anyhow::Result<Input> {
        if let Some(path) = &self.file {
            let t = boolrg::truth_table::read_table(path).with_context(|| format!("reading {}", path.display()))?;
            return Ok(Input::Table(t));
        }
        let n = self.arity()?;
        if n > N_MAX {
            return match self.symmetric()? {
                Some(f) => Ok(Input::Symmetric(f)),
                None => bail!("arity {n} exceeds the table limit {N_MAX}; only parity, majority and mod_p run beyond it"),
            };
        }
        self.table(seed).map(Input::Table)
    }

    fn table(&self, seed: u64) -> anyhow::Result<TruthTable> {
        if let Some(path) = &self.file {
            return boolrg::truth_table::read_table(path).with_context(|| format!("reading {}", path.display()));
        }
        let n = self.arity()?;
        let t = match self.family.expect("clap requires family or file") {
            Family::Parity => families::parity(n)?,
            Family::Majority => families::majority_with(n, self.majority_rule.into())?,
            Family::ModP => families::mod_p(n, self.p)?,
            Family::Poly => families::random_polynomial_exact_degree(n, self.xi()?, self.term_density, seed)?.to_table(),
            Family::Random => families::random_table(n, self.p0, seed)?,
            Family::Planted => match self.noise {
                Some(rate) => families::planted_near_polynomial(n, self.xi()?, rate, seed)?.table,
                None => families::planted_with_flips(n, self.xi()?, self.flips.unwrap_or(1), seed)?.table,
            },
        };
        Ok(t)
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OrderPolicy {
    /// `--order`, or inputs 1, 2, 3, ... in turn.
    Fixed,
    /// A seeded random order.
    Random,
    /// Every order (at most 720 of them).
    All,
}

#[derive(Args)]
struct FlowArgs {
    #[command(flatten)]
    source: Source,
    /// Number of decimations (default: all inputs, or the length of --order).
    #[arg(long)]
    steps: Option<usize>,
    /// Comma-separated original input labels, e.g. `3,1`.
    #[arg(long, value_delimiter = ',')]
    order: Option<Vec<usize>>,
    #[arg(long, value_enum, default_value = "fixed")]
    order_policy: OrderPolicy,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    generic_band: Option<f64>,
    #[arg(long)]
    composite_tau: Option<f64>,
    #[arg(long)]
    composite_c: Option<f64>,
    /// Largest annihilation depth searched.
    #[arg(long)]
    cap: Option<usize>,
    /// Random orders per check above the exhaustive limit.
    #[arg(long)]
    samples: Option<usize>,
    /// Enables the near-polynomial stage at this degree.
    #[arg(long)]
    near_xi: Option<usize>,
    #[arg(long = "C", default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DetectMethod {
    Exhaustive,
    Truncate,
    Sieve,
}

#[derive(Args)]
struct DetectArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, value_enum)]
    method: DetectMethod,
    #[arg(long = "C", default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Decimation orders sampled by the sieve.
    #[arg(long, default_value_t = 64)]
    samples: usize,
}

#[derive(Args)]
struct CountArgs {
    /// Comma-separated `n:xi` points.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["n", "sqrt_sweep"])]
    points: Option<Vec<String>>,
    /// Arities evaluated at `xi = ceil(sqrt(n))`.
    #[arg(long, value_delimiter = ',', conflicts_with = "n")]
    sqrt_sweep: Option<Vec<usize>>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    xi: Option<usize>,
    #[arg(long = "C", default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Report the naive adjustment exponent for this M (needs --n) instead.
    #[arg(long, requires = "n")]
    naive: Option<usize>,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    source: Source,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SymFamily {
    Parity,
    Majority,
    #[value(name = "mod_p")]
    ModP,
}

#[derive(Args)]
struct SymFlowArgs {
    #[arg(long, value_enum)]
    family: SymFamily,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    steps: usize,
    #[arg(long, default_value_t = 3)]
    p: u32,
    #[arg(long, value_enum, default_value = "strict")]
    majority_rule: Rule,
    /// Track residue patterns with this period (defaults to p for mod_p).
    #[arg(long)]
    modulus: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<Error>() {
                Some(Error::Capacity { .. }) => ExitCode::from(EXIT_CAPACITY),
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    let seed = cli.seed.unwrap_or_else(|| {
        let s = rand::random::<u64>();
        eprintln!("seed: {s}");
        s
    });
    let mut out = Vec::new();
    let code = match &cli.command {
        Command::Flow(a) => cmd_flow(a, seed, cli.json, &mut out)?,
        Command::Classify(a) => cmd_classify(a, seed, &mut out)?,
        Command::Detect(a) => cmd_detect(a, seed, &mut out)?,
        Command::Count(a) => cmd_count(a, cli.json, &mut out)?,
        Command::Gen(a) => {
            a.source.table(seed)?.write_bfrg(&mut out)?;
            0
        }
        Command::SymFlow(a) => cmd_sym_flow(a, cli.json, &mut out)?,
    };
    match &cli.out {
        Some(path) => fs::write(path, &out).with_context(|| format!("writing {}", path.display()))?,
        None => io::stdout().write_all(&out)?,
    }
    Ok(code)
}

fn cmd_flow(a: &FlowArgs, seed: u64, json: bool, out: &mut Vec<u8>) -> anyhow::Result<u8> {
    let analytic = (a.source.family == Some(Family::Random)).then_some(a.source.p0);
    let t = match a.source.load(seed)? {
        Input::Table(t) => t,
        Input::Symmetric(f) => {
            if a.order.is_some() || a.order_policy != OrderPolicy::Fixed {
                bail!("decimation orders are meaningless for a symmetric function");
            }
            let steps = a.steps.unwrap_or(f.arity());
            let trace = f.flow(steps, None)?.trace;
            emit_traces(&[trace], None, analytic, json, out)?;
            return Ok(0);
        }
    };
    let n = t.arity();
    let steps = match (&a.order, a.steps) {
        (Some(o), Some(s)) if o.len() != s => bail!("--order has {} labels but --steps is {s}", o.len()),
        (Some(o), _) => o.len(),
        (None, Some(s)) => s,
        (None, None) => n,
    };
    if steps > n {
        bail!("{steps} steps exceed arity {n}");
    }
    let orders = match (a.order_policy, &a.order) {
        (OrderPolicy::Fixed, Some(o)) => vec![DecimationOrder::new(o.clone())],
        (OrderPolicy::Fixed, None) => vec![DecimationOrder::identity(steps)],
        (_, Some(_)) => bail!("--order only applies to the fixed policy"),
        (OrderPolicy::Random, None) => {
            let mut rng = families::rng_from_seed(seed);
            vec![DecimationOrder::random(n, steps, &mut rng)]
        }
        (OrderPolicy::All, None) => {
            let count: f64 = (0..steps).map(|i| (n - i) as f64).product();
            if count > 720.0 {
                bail!("{count} orders of length {steps}; the all policy is limited to 720");
            }
            DecimationOrder::all(n, steps)
        }
    };
    let traces = orders
        .iter()
        .map(|o| flow::empirical_flow(&t, o))
        .collect::<boolrg::Result<Vec<_>>>()?;
    let labels = (a.order_policy == OrderPolicy::All).then_some(&orders[..]);
    emit_traces(&traces, labels, analytic, json, out)?;
    Ok(0)
}

/// One trace as plain CSV; several (the `all` policy) with a leading
/// `order` column.
fn emit_traces(
    traces: &[flow::FlowTrace],
    orders: Option<&[DecimationOrder]>,
    analytic: Option<f64>,
    json: bool,
    out: &mut Vec<u8>,
) -> anyhow::Result<()> {
    if json {
        let text = match orders {
            None => serde_json::to_string_pretty(&traces[0])?,
            Some(_) => serde_json::to_string_pretty(traces)?,
        };
        writeln!(out, "{text}")?;
        return Ok(());
    }
    let Some(orders) = orders else {
        traces[0].write_csv(&mut *out, analytic)?;
        return Ok(());
    };
    for (i, (trace, order)) in traces.iter().zip(orders).enumerate() {
        let mut buf = Vec::new();
        trace.write_csv(&mut buf, analytic)?;
        let text = String::from_utf8(buf)?;
        let label = order.vars().iter().map(|v| v.to_string()).collect::<Vec<_>>().join("-");
        for (j, line) in text.lines().enumerate() {
            match j {
                0 if i == 0 => writeln!(out, "order,{line}")?,
                0 => {}
                _ => writeln!(out, "{label},{line}")?,
            }
        }
    }
    Ok(())
}

fn label_text(r: &ClassificationReport) -> String {
    let name = serde_json::to_value(r.label)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default();
    match (r.label, r.xi) {
        (PhaseLabel::Annihilated | PhaseLabel::NearPolynomial, Some(xi)) => format!("{name}({xi})"),
        _ => name,
    }
}

fn cmd_classify(a: &ClassifyArgs, seed: u64, out: &mut Vec<u8>) -> anyhow::Result<u8> {
    let mut config = ClassifyConfig::default();
    if let Some(v) = a.burn_in {
        config.burn_in = v;
    }
    if let Some(v) = a.generic_band {
        config.generic_band = v;
    }
    if let Some(v) = a.composite_tau {
        config.composite_tau_min = v;
    }
    if let Some(v) = a.composite_c {
        config.composite_c = v;
    }
    if let Some(v) = a.samples {
        config.sampling.samples = v;
    }
    config.sampling.seed = seed;
    config.annihilation_cap = a.cap;
    config.near_polynomial = a.near_xi.map(|xi| NearPolynomialConfig {
        xi,
        bound: BoundParams { c: a.c, alpha: a.alpha },
    });
    let report = match a.source.load(seed)? {
        Input::Table(t) => flow::classify(Subject::Table(&t), &config)?,
        Input::Symmetric(f) => flow::classify(Subject::Symmetric(&f), &config)?,
    };
    eprintln!("label: {}", label_text(&report));
    writeln!(out, "{}", report.to_json()?)?;
    Ok(0)
}

fn cmd_detect(a: &DetectArgs, seed: u64, out: &mut Vec<u8>) -> anyhow::Result<u8> {
    let t = a.source.table(seed)?;
    let xi = a.source.xi()?;
    let params = BoundParams { c: a.c, alpha: a.alpha };
    let report: DecompositionReport = match a.method {
        DetectMethod::Exhaustive => detector::exhaustive_nearest_polynomial(&t, xi, params)?,
        DetectMethod::Truncate => detector::anf_truncation(&t, xi, params)?,
        DetectMethod::Sieve => {
            let sampling = OrderSampling {
                samples: a.samples,
                seed,
                ..OrderSampling::default()
            };
            detector::derivative_sieve_sampled(&t, xi, &sampling, params)?
        }
    };
    writeln!(out, "{}", report.to_json()?)?;
    Ok(if report.meets_bound { 0 } else { EXIT_FAILS_BOUND })
}

fn parse_point(s: &str) -> anyhow::Result<(usize, usize)> {
    let (n, xi) = s.split_once(':').with_context(|| format!("point {s:?} is not n:xi"))?;
    Ok((n.trim().parse()?, xi.trim().parse()?))
}

fn cmd_count(a: &CountArgs, json: bool, out: &mut Vec<u8>) -> anyhow::Result<u8> {
    if let Some(m) = a.naive {
        let n = a.n.expect("clap requires --n");
        let est = naive_adjustment_estimate(n, m)?;
        if json {
            writeln!(out, "{}", serde_json::to_string_pretty(&est)?)?;
        } else {
            writeln!(out, "n,m,exponent,exceeds")?;
            writeln!(out, "{n},{m},{},{}", est.exponent, est.exceeds)?;
        }
        return Ok(0);
    }
    let points: Vec<(usize, usize)> = if let Some(ps) = &a.points {
        ps.iter().map(|p| parse_point(p)).collect::<anyhow::Result<_>>()?
    } else if let Some(ns) = &a.sqrt_sweep {
        ns.iter().map(|&n| (n, (n as f64).sqrt().ceil() as usize)).collect()
    } else if let (Some(n), Some(xi)) = (a.n, a.xi) {
        vec![(n, xi)]
    } else {
        bail!("give --n and --xi, --points or --sqrt-sweep");
    };
    let rows = margin_sweep(&points, a.c, a.alpha)?;
    if json {
        writeln!(out, "{}", serde_json::to_string_pretty(&rows)?)?;
    } else {
        write_sweep_csv(&rows, &mut *out)?;
    }
    Ok(0)
}

fn cmd_sym_flow(a: &SymFlowArgs, json: bool, out: &mut Vec<u8>) -> anyhow::Result<u8> {
    let (f, modulus) = match a.family {
        SymFamily::Parity => (SymmetricFunction::parity(a.n), a.modulus),
        SymFamily::Majority => (SymmetricFunction::majority(a.n, a.majority_rule.into()), a.modulus),
        SymFamily::ModP => (SymmetricFunction::mod_p(a.n, a.p)?, a.modulus.or(Some(a.p as usize))),
    };
    let flow = f.flow(a.steps, modulus)?;
    if json {
        writeln!(out, "{}", serde_json::to_string_pretty(&flow)?)?;
    } else {
        flow.trace.write_csv(&mut *out, None)?;
        if let Some(c) = flow.cycle {
            eprintln!("cycle: start {} period {}", c.start, c.period);
        }
    }
    Ok(0)
}
