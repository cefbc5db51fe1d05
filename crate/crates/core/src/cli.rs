//! The `nis` command line.
//!
//! Every subcommand writes CSV (or a grid file for `density`) to `--output`
//! or stdout. The first line is a `#` comment holding the tool version, the
//! generator name and the fully defaulted run specification, so the same
//! arguments reproduce the same bytes. Timing columns stay empty unless
//! `--timings` is given.

use std::ffi::OsString;
use std::fmt;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::integrands::{lookup_with, parse_key, BenchmarkProblem};
use crate::lbfp::{build_histogram, serialize_grid, OriginPolicy};
use crate::metrics::{run_replications, ReplicationReport, RunRecord, CSV_HEADER};
use crate::nis::{effective_sample_size, reference_bandwidth, BandwidthRule, Method, NisConfig};
use crate::queueing::{
    gambler_ruin_prob, generate_synthetic_trace, read_trace, write_trace, PilotWeighting, QueueConfig, QueueMethod,
    QueueModel,
};
use crate::rng::GENERATOR_NAME;

/// Records written by `trace-gen` when `--n` is not given.
pub const DEFAULT_TRACE_LEN: usize = 22_248;

#[derive(Debug, Parser)]
#[command(name = "nis", version, about = "Nonparametric importance sampling with LBFP proposals")]
pub struct Cli {
    /// Master seed.
    #[arg(long, global = true, env = "NIS_SEED", default_value_t = 42)]
    pub seed: u64,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true, env = "NIS_WORKERS")]
    pub workers: Option<usize>,
    /// Output file (default: stdout).
    #[arg(short, long, global = true)]
    pub output: Option<PathBuf>,
    /// Fill the timing columns.
    #[arg(long, global = true)]
    pub timings: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One estimate of one problem.
    Integrate(IntegrateArgs),
    /// Replication study over budgets and methods.
    Study(StudyArgs),
    /// Level-crossing probability study for a queue.
    Queue(QueueArgs),
    /// Write a synthetic interarrival/service trace.
    TraceGen(TraceGenArgs),
    /// Fit an LBFP to the columns of a CSV sample file and print the grid.
    Density(DensityArgs),
}

/// Problem selection: `--problem` takes a name or a full key such as
/// `bs-call?K=130`; the named flags add or override parameters.
#[derive(Debug, Clone, Args)]
pub struct ProblemArgs {
    #[arg(long)]
    pub problem: String,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long = "K")]
    pub strike: Option<f64>,
    #[arg(long = "S0")]
    pub spot: Option<f64>,
    #[arg(long = "r")]
    pub rate: Option<f64>,
    #[arg(long = "sigma")]
    pub volatility: Option<f64>,
    #[arg(long = "T")]
    pub maturity: Option<f64>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub phi: Option<u8>,
}

impl ProblemArgs {
    pub fn resolve(&self) -> Result<BenchmarkProblem> {
        let (name, mut params) = parse_key(&self.problem)?;
        let mut add = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                params.push((k.to_string(), v));
            }
        };
        add("d", self.d.map(|v| v.to_string()));
        add("K", self.strike.map(|v| v.to_string()));
        add("S0", self.spot.map(|v| v.to_string()));
        add("r", self.rate.map(|v| v.to_string()));
        add("sigma", self.volatility.map(|v| v.to_string()));
        add("T", self.maturity.map(|v| v.to_string()));
        add("a", self.a.map(|v| v.to_string()));
        add("phi", self.phi.map(|v| v.to_string()));
        lookup_with(&name, &params)
    }
}

/// Overrides of the two-stage defaults of a problem.
#[derive(Debug, Clone, Args)]
pub struct StageArgs {
    /// Pilot fraction (default: the problem's choice per method).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Bandwidth rule: `plugin`, `reference`, `fixed:<h>` or a number.
    #[arg(long)]
    pub h: Option<BandwidthRule>,
    /// Standardize pilot axes before binning.
    #[arg(long)]
    pub standardize: Option<bool>,
}

impl StageArgs {
    fn config(&self, bench: &BenchmarkProblem, method: Method, n: usize, seed: u64) -> NisConfig {
        let mut c = bench.config(method, n, seed);
        if let Some(l) = self.lambda {
            c.pilot_fraction = l;
        }
        if let Some(h) = self.h {
            c.bandwidth = h;
        }
        if let Some(s) = self.standardize {
            c.standardize = s;
        }
        c
    }

    fn describe(&self, bench: &BenchmarkProblem, method: Method, n: usize) -> String {
        let c = self.config(bench, method, n, 0);
        format!(
            "lambda={} h={} standardize={}",
            c.pilot_fraction, c.bandwidth, c.standardize
        )
    }
}

#[derive(Debug, Args)]
pub struct IntegrateArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long)]
    pub method: Method,
    #[arg(long)]
    pub n: usize,
    #[command(flatten)]
    pub stage: StageArgs,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Comma-separated methods (default: all methods of the problem).
    #[arg(long, value_delimiter = ',')]
    pub methods: Vec<Method>,
    /// Comma-separated budgets.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 100)]
    pub runs: usize,
    /// Method the RE column is relative to (default: mc if listed, else
    /// the first method).
    #[arg(long)]
    pub baseline: Option<Method>,
    #[command(flatten)]
    pub stage: StageArgs,
}

#[derive(Debug, Args)]
pub struct QueueArgs {
    /// Trace CSV; without it a synthetic trace is generated from
    /// `--trace-seed`.
    #[arg(long, conflicts_with = "mm1")]
    pub trace: Option<PathBuf>,
    #[arg(long, default_value_t = 2008)]
    pub trace_seed: u64,
    /// Use an M/M/c model with `--mu` and `--nu` instead of a trace.
    #[arg(long)]
    pub mm1: bool,
    #[arg(long, default_value_t = 0.074)]
    pub mu: f64,
    #[arg(long, default_value_t = 0.147)]
    pub nu: f64,
    #[arg(long, default_value_t = 1)]
    pub servers: usize,
    /// Comma-separated levels.
    #[arg(long = "K", value_delimiter = ',', required = true)]
    pub levels: Vec<usize>,
    /// Comma-separated methods.
    #[arg(long = "method", value_delimiter = ',', default_value = "mc,is,nis")]
    pub methods: Vec<QueueMethod>,
    #[arg(long, default_value_t = 1_000_000)]
    pub periods: usize,
    #[arg(long, default_value_t = 20)]
    pub runs: usize,
    #[arg(long, default_value_t = 0.15)]
    pub lambda: f64,
    /// Pilot weights: `path` or `draw`.
    #[arg(long, default_value = "path")]
    pub weighting: PilotWeighting,
    /// Pilot weights for the `is` interarrival rate: `path` or `draw`.
    #[arg(long, default_value = "draw")]
    pub is_weighting: PilotWeighting,
    /// Uniform floor mass in the fitted service proposal.
    #[arg(long, default_value_t = 0.01)]
    pub floor: f64,
    /// Service proposal width: `reference`, `fixed:<h>` or a number.
    #[arg(long, default_value = "reference")]
    pub h: BandwidthRule,
}

#[derive(Debug, Args)]
pub struct TraceGenArgs {
    #[arg(long, default_value_t = DEFAULT_TRACE_LEN)]
    pub n: usize,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    /// CSV with a header row; every column except `--weight-column` is a
    /// coordinate.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub weight_column: Option<String>,
    /// `reference`, `fixed:<h>` or a number.
    #[arg(long, default_value = "reference")]
    pub h: BandwidthRule,
}

/// Effective settings echoed in the output header.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub subcommand: &'static str,
    pub fields: Vec<(String, String)>,
}

impl RunSpec {
    fn new(subcommand: &'static str) -> Self {
        Self {
            subcommand,
            fields: Vec::new(),
        }
    }

    fn set(&mut self, key: &str, value: impl fmt::Display) {
        self.fields.push((key.to_string(), value.to_string()));
    }
}

impl fmt::Display for RunSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "subcommand={}", self.subcommand)?;
        for (k, v) in &self.fields {
            write!(f, " {k}={v}")?;
        }
        Ok(())
    }
}

fn header(spec: &RunSpec) -> String {
    format!(
        "# nis {} generator={} {spec}",
        env!("CARGO_PKG_VERSION"),
        GENERATOR_NAME
    )
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Errors go to stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// Runs a parsed command inside a pool of `cli.workers` threads.
pub fn run(cli: &Cli) -> Result<()> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(Error::InvalidArgument("--workers must be positive".into()));
        }
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;
    let out: Box<dyn Write + Send> = match &cli.output {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout()),
    };
    let mut out = BufWriter::new(out);
    pool.install(|| match &cli.command {
        Command::Integrate(a) => integrate(cli, a, &mut out),
        Command::Study(a) => study(cli, a, &mut out),
        Command::Queue(a) => queue(cli, a, &mut out),
        Command::TraceGen(a) => trace_gen(cli, a, &mut out),
        Command::Density(a) => density(cli, a, &mut out),
    })?;
    out.flush()?;
    Ok(())
}

fn check_method(bench: &BenchmarkProblem, method: Method) -> Result<()> {
    if !bench.methods.contains(&method) {
        return Err(Error::UnsupportedMethod {
            method: method.name().into(),
            problem: bench.key.clone(),
        });
    }
    if method == Method::Nsis && bench.problem.target_scale() == 1.0 {
        log::warn!(
            "{}: target is normalized, so nsis gives up the unbiased estimator for nothing",
            bench.key
        );
    }
    Ok(())
}

fn ms(secs: f64, on: bool) -> String {
    if on {
        format!("{:.6e}", secs * 1e3)
    } else {
        String::new()
    }
}

fn opt<T: fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn integrate(cli: &Cli, a: &IntegrateArgs, out: &mut impl Write) -> Result<()> {
    let bench = a.problem.resolve()?;
    check_method(&bench, a.method)?;
    let config = a.stage.config(&bench, a.method, a.n, cli.seed);
    let mut spec = RunSpec::new("integrate");
    spec.set("problem", &bench.key);
    spec.set("method", a.method);
    spec.set("N", a.n);
    spec.set("stage", format!("[{}]", a.stage.describe(&bench, a.method, a.n)));
    spec.set("runs", 1);
    spec.set("seed", cli.seed);
    spec.set("timings", cli.timings);
    spec.set("output", opt(cli.output.as_ref().map(|p| p.display())));
    let r = bench.run_with(a.method, &config)?;
    writeln!(out, "{}", header(&spec))?;
    writeln!(out, "problem,method,N,d,M,estimate,std_error,oracle,bandwidth,time_ms")?;
    writeln!(
        out,
        "{},{},{},{},{},{:.12e},{:.6e},{:.12e},{},{}",
        bench.key,
        a.method,
        a.n,
        bench.dim(),
        r.pilot_size,
        r.estimate,
        r.std_error(),
        bench.oracle,
        opt(r.bandwidth.map(|h| format!("{h:.6e}"))),
        ms(r.elapsed_secs, cli.timings)
    )?;
    Ok(())
}

fn study(cli: &Cli, a: &StudyArgs, out: &mut impl Write) -> Result<()> {
    let bench = a.problem.resolve()?;
    let methods = if a.methods.is_empty() {
        bench.methods.clone()
    } else {
        a.methods.clone()
    };
    for &m in &methods {
        check_method(&bench, m)?;
    }
    let baseline = a
        .baseline
        .unwrap_or(if methods.contains(&Method::Mc) { Method::Mc } else { methods[0] });
    if !methods.contains(&baseline) {
        return Err(Error::InvalidArgument(format!("baseline {baseline} is not among --methods")));
    }
    let mut spec = RunSpec::new("study");
    spec.set("problem", &bench.key);
    spec.set("methods", join(&methods));
    spec.set("N", join(&a.n));
    spec.set("baseline", baseline);
    for &m in methods.iter().filter(|m| m.is_two_stage()) {
        spec.set(&format!("stage.{m}"), format!("[{}]", a.stage.describe(&bench, m, a.n[0])));
    }
    spec.set("runs", a.runs);
    spec.set("seed", cli.seed);
    spec.set("timings", cli.timings);
    spec.set("output", opt(cli.output.as_ref().map(|p| p.display())));
    writeln!(out, "{}", header(&spec))?;
    writeln!(out, "{CSV_HEADER}")?;
    for &n in &a.n {
        let reports: Vec<ReplicationReport> = methods
            .iter()
            .map(|&m| {
                let records = run_replications(a.runs, cli.seed, |s| {
                    let r = bench.run_with(m, &a.stage.config(&bench, m, n, s))?;
                    Ok(RunRecord {
                        estimate: r.estimate,
                        elapsed_secs: r.elapsed_secs,
                    })
                })?;
                Ok(ReplicationReport::new(
                    bench.key.clone(),
                    m.name(),
                    n,
                    bench.dim(),
                    cli.seed,
                    Some(bench.oracle),
                    records,
                ))
            })
            .collect::<Result<_>>()?;
        let base = &reports[methods.iter().position(|&m| m == baseline).expect("checked")];
        for r in &reports {
            writeln!(out, "{}", r.csv_row(Some(r.relative_efficiency(base)), cli.timings))?;
        }
    }
    Ok(())
}

fn queue(cli: &Cli, a: &QueueArgs, out: &mut impl Write) -> Result<()> {
    let mut spec = RunSpec::new("queue");
    let (base, label) = if a.mm1 {
        spec.set("model", format!("mm{}(mu={},nu={})", a.servers, a.mu, a.nu));
        let m = QueueModel::mm1(a.mu, a.nu, 2)?.with_servers(a.servers)?;
        (m, format!("mm{}", a.servers))
    } else {
        let records = match &a.trace {
            Some(p) => {
                spec.set("trace", p.display());
                read_trace(BufReader::new(File::open(p)?))?
            }
            None => {
                spec.set("trace", format!("synthetic(n={DEFAULT_TRACE_LEN},seed={})", a.trace_seed));
                generate_synthetic_trace(DEFAULT_TRACE_LEN, a.trace_seed)
            }
        };
        (QueueModel::from_trace(&records, a.servers, 2)?, "trace".to_string())
    };
    spec.set("servers", a.servers);
    spec.set("K", join(&a.levels));
    spec.set("methods", join(&a.methods));
    spec.set("periods", a.periods);
    spec.set("lambda", a.lambda);
    let weighting_name = |w: PilotWeighting| match w {
        PilotWeighting::PathLikelihood => "path",
        PilotWeighting::PerDraw => "draw",
    };
    spec.set("weighting", weighting_name(a.weighting));
    spec.set("is_weighting", weighting_name(a.is_weighting));
    spec.set("floor", a.floor);
    spec.set("h", a.h);
    spec.set("runs", a.runs);
    spec.set("seed", cli.seed);
    spec.set("timings", cli.timings);
    spec.set("output", opt(cli.output.as_ref().map(|p| p.display())));
    writeln!(out, "{}", header(&spec))?;
    writeln!(out, "{CSV_HEADER}")?;
    let mut config = QueueConfig::new(a.periods, cli.seed);
    config.pilot_fraction = a.lambda;
    config.weighting = a.weighting;
    config.is_weighting = a.is_weighting;
    config.service_floor = a.floor;
    config.service_bandwidth = a.h;
    for &k in &a.levels {
        let model = base.with_level(k)?;
        let oracle = (a.mm1 && a.servers == 1).then(|| gambler_ruin_prob(a.mu, a.nu, k));
        let key = format!("queue?model={label}&servers={}&K={k}", a.servers);
        let reports: Vec<ReplicationReport> = a
            .methods
            .iter()
            .map(|&m| crate::metrics::replicate_queue(&key, &model, m, &config, a.runs, cli.seed, oracle))
            .collect::<Result<_>>()?;
        let mc = a.methods.iter().position(|&m| m == QueueMethod::Mc).map(|i| &reports[i]);
        for r in &reports {
            let re = mc.filter(|b| b.mse() > 0.0).map(|b| r.relative_efficiency(b));
            writeln!(out, "{}", r.csv_row(re, cli.timings))?;
        }
    }
    Ok(())
}

fn trace_gen(cli: &Cli, a: &TraceGenArgs, out: &mut impl Write) -> Result<()> {
    if a.n == 0 {
        return Err(Error::InvalidArgument("--n must be positive".into()));
    }
    let mut spec = RunSpec::new("trace-gen");
    spec.set("n", a.n);
    spec.set("seed", cli.seed);
    spec.set("output", opt(cli.output.as_ref().map(|p| p.display())));
    writeln!(out, "{}", header(&spec))?;
    write_trace(out, &generate_synthetic_trace(a.n, cli.seed))
}

fn density(cli: &Cli, a: &DensityArgs, out: &mut impl Write) -> Result<()> {
    let text = std::fs::read_to_string(&a.input)?;
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
    let (_, head) = lines.next().ok_or_else(|| Error::Parse {
        line: 1,
        message: "missing header row".into(),
    })?;
    let names: Vec<&str> = head.split(',').map(str::trim).collect();
    let weight_col = match &a.weight_column {
        Some(w) => Some(names.iter().position(|n| n == w).ok_or_else(|| {
            Error::InvalidArgument(format!("no column `{w}` in {}", a.input.display()))
        })?),
        None => None,
    };
    let d = names.len() - weight_col.is_some() as usize;
    if d == 0 {
        return Err(Error::InvalidArgument("no coordinate columns".into()));
    }
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for (i, line) in lines {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != names.len() {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("expected {} columns, found {}", names.len(), cells.len()),
            });
        }
        let mut w = 1.0;
        for (j, c) in cells.iter().enumerate() {
            let v: f64 = c.parse().map_err(|_| Error::Parse {
                line: i + 1,
                message: format!("invalid number `{c}`"),
            })?;
            if Some(j) == weight_col {
                w = v;
            } else {
                points.push(v);
            }
        }
        weights.push(w);
    }
    let h = match a.h {
        BandwidthRule::Fixed(h) => h,
        BandwidthRule::Reference => reference_bandwidth(&points, &weights, d, effective_sample_size(&weights))?,
        BandwidthRule::Plugin => {
            return Err(Error::InvalidArgument(
                "plugin widths need an integration problem; use reference or fixed:<h>".into(),
            ))
        }
    };
    let grid = build_histogram(d, &points, &weights, h, &OriginPolicy::Auto)?;
    let mut spec = RunSpec::new("density");
    spec.set("input", a.input.display());
    spec.set("columns", names.join(";"));
    spec.set("weight_column", opt(a.weight_column.as_ref()));
    spec.set("h", a.h);
    spec.set("samples", weights.len());
    spec.set("seed", cli.seed);
    spec.set("output", opt(cli.output.as_ref().map(|p| p.display())));
    writeln!(out, "{}", header(&spec))?;
    out.write_all(serialize_grid(&grid).as_bytes())?;
    Ok(())
}
