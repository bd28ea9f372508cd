//! `ctop` subcommands. Exit codes: 0 feasible/success, 1 infeasible, 2 timeout,
//! 64 usage error, 65 data error.

use std::ffi::OsString;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime};

use clap::{Args, Parser, Subcommand, ValueEnum};

use ctop_core::instance_io::{self, read_instance, serialize, write_atomic, ReadError};
use ctop_core::oracle::{enumerate_orders, verify_order, ENUMERATION_WARN_N};
use ctop_core::preprocess::{preprocess, PreprocessOptions, ViForm};
use ctop_core::solver::{solve, Branching, Mode, ModelKind, SolveConfig, SolveOutcome, Status};
use ctop_core::{DmdgpOrder, Graph, Instance};

use crate::harness::{discover, run_bench, write_outputs, BenchConfig, BenchSpec, FlagSet, PRESETS};
use crate::profile::final_fraction;
use crate::record::format_ms;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INFEASIBLE: i32 = 1;
pub const EXIT_TIMEOUT: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;

#[derive(Parser, Debug)]
#[command(name = "ctop", version, about = "Find and check contiguous trilateration (DMDGP) orders of graphs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Generate an instance file.
    #[command(subcommand)]
    Gen(GenCmd),
    /// Run the infeasibility checks only.
    Check(CheckArgs),
    /// Search for an order.
    Solve(SolveArgs),
    /// Check a given order.
    Verify(VerifyArgs),
    /// List and count every order (symmetry breaking off).
    Enumerate(EnumerateArgs),
    /// Run a model x flag-set matrix over a directory of instances.
    Bench(BenchArgs),
}

#[derive(Subcommand, Debug)]
enum GenCmd {
    /// Uniform graph with a fixed number of edges.
    Random {
        #[arg(long)]
        n: usize,
        /// Edge density in (0, 1]; m = round(D * n(n-1)/2).
        #[arg(long, conflicts_with = "m", required_unless_present = "m")]
        density: Option<f64>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hub vertex 0 joined to the cycle 1..n-1.
    Wheel {
        /// Total number of vertices.
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct InstanceArgs {
    file: PathBuf,
    #[arg(long, default_value_t = 3)]
    k: usize,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    /// Also print reduced domains, symmetry constraints and inequalities.
    #[arg(long)]
    report: bool,
    #[arg(long, value_enum, default_value_t = ViArg::Off)]
    vi: ViArg,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModelArg {
    Rank,
    Vertex,
    Combined,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Rank => ModelKind::Rank,
            ModelArg::Vertex => ModelKind::Vertex,
            ModelArg::Combined => ModelKind::Combined,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ViArg {
    Span,
    Pairwise,
    Off,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BranchArg {
    Position,
    MinDomain,
}

#[derive(Args, Debug)]
struct SearchArgs {
    #[arg(long, value_enum, default_value_t = ModelArg::Combined)]
    model: ModelArg,
    /// Seconds.
    #[arg(long, default_value_t = 60.0)]
    time_limit: f64,
    #[arg(long, value_enum)]
    branching: Option<BranchArg>,
    /// Hall-interval tightening on all-different.
    #[arg(long)]
    hall: bool,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    #[command(flatten)]
    search: SearchArgs,
    /// Report every order instead of the first.
    #[arg(long)]
    all: bool,
    /// With --all, stop after this many orders.
    #[arg(long)]
    limit: Option<usize>,
    #[arg(long)]
    no_checks: bool,
    #[arg(long)]
    no_domain_reduction: bool,
    #[arg(long)]
    no_symmetry: bool,
    #[arg(long, value_enum, default_value_t = ViArg::Off)]
    vi: ViArg,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    /// Vertices by position, comma or space separated.
    #[arg(long)]
    order: String,
}

#[derive(Args, Debug)]
struct EnumerateArgs {
    #[command(flatten)]
    inst: InstanceArgs,
    #[command(flatten)]
    search: SearchArgs,
    /// Print at most this many orders.
    #[arg(long)]
    limit: Option<usize>,
    /// Print the count only.
    #[arg(long)]
    count_only: bool,
    /// Use brute-force enumeration instead of the solver.
    #[arg(long)]
    oracle: bool,
}

#[derive(Args, Debug)]
struct BenchArgs {
    dir: PathBuf,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "combined")]
    models: Vec<ModelArg>,
    /// Flag-set presets: plain, checks, domred, sym, full, vi-span, vi-pairwise.
    #[arg(long, value_delimiter = ',', default_value = "sym")]
    flags: Vec<String>,
    #[arg(long, default_value_t = 60.0)]
    time_limit: f64,
    /// Worker threads; defaults to available parallelism.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, default_value = "bench-out")]
    out: PathBuf,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
        }
    }
}

type CliResult = Result<i32, CliError>;

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn data(e: impl std::fmt::Display) -> CliError {
    CliError::Data(e.to_string())
}

/// Parses `args` (program name first) and runs the subcommand.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    let _ = out.write_all(text.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    EXIT_USAGE
                }
            };
        }
    };
    let res = match cli.cmd {
        Cmd::Gen(g) => cmd_gen(g, out),
        Cmd::Check(a) => cmd_check(a, out, err),
        Cmd::Solve(a) => cmd_solve(a, out, err),
        Cmd::Verify(a) => cmd_verify(a, out),
        Cmd::Enumerate(a) => cmd_enumerate(a, out, err),
        Cmd::Bench(a) => cmd_bench(a, out, err),
    };
    match res {
        Ok(code) => code,
        Err(e) => {
            let (CliError::Usage(msg) | CliError::Data(msg)) = &e;
            let kind = if e.code() == EXIT_USAGE { "usage error" } else { "data error" };
            let _ = writeln!(err, "ctop: {kind}: {msg}");
            e.code()
        }
    }
}

fn io_out(e: io::Error) -> CliError {
    data(format!("writing output: {e}"))
}

fn load(path: &Path, err: &mut dyn Write) -> Result<Graph, CliError> {
    let g = read_instance(path).map_err(|e| match e {
        ReadError::Io(io) => data(format!("{}: {io}", path.display())),
        ReadError::Parse(p) => data(format!("{}: {p}", path.display())),
    })?;
    if !g.is_connected() {
        let _ = writeln!(err, "ctop: warning: {} is disconnected, so no order exists", path.display());
    }
    Ok(g)
}

fn load_instance(a: &InstanceArgs, err: &mut dyn Write) -> Result<Instance, CliError> {
    if a.k == 0 {
        return Err(usage("--k must be at least 1"));
    }
    let g = load(&a.file, err)?;
    Instance::new(g, a.k).map_err(usage)
}

fn time_limit(secs: f64) -> Result<Duration, CliError> {
    if !(secs.is_finite() && secs > 0.0) {
        return Err(usage("--time-limit must be a positive number of seconds"));
    }
    Ok(Duration::from_secs_f64(secs))
}

fn vi_form(v: ViArg) -> Option<ViForm> {
    match v {
        ViArg::Span => Some(ViForm::Span),
        ViArg::Pairwise => Some(ViForm::Pairwise),
        ViArg::Off => None,
    }
}

fn search_config(s: &SearchArgs) -> Result<SolveConfig, CliError> {
    Ok(SolveConfig {
        model: s.model.into(),
        time_limit: time_limit(s.time_limit)?,
        branching: s.branching.map(|b| match b {
            BranchArg::Position => Branching::PositionSequential,
            BranchArg::MinDomain => Branching::MinDomain,
        }),
        hall_intervals: s.hall,
        ..SolveConfig::default()
    })
}

fn order_line(o: &DmdgpOrder) -> String {
    let v: Vec<String> = o.vertices().iter().map(ToString::to_string).collect();
    format!("order {}", v.join(" "))
}

fn status_code(s: Status) -> i32 {
    match s {
        Status::Feasible => EXIT_OK,
        Status::Infeasible => EXIT_INFEASIBLE,
        Status::Timeout => EXIT_TIMEOUT,
    }
}

fn print_stats(out: &mut dyn Write, o: &SolveOutcome) -> io::Result<()> {
    if o.preprocess.is_infeasible() {
        writeln!(out, "preprocess {}", o.preprocess)?;
    }
    writeln!(out, "choice_points {}", o.stats.choice_points)?;
    writeln!(out, "fails {}", o.stats.fails)?;
    writeln!(out, "time_ms {}", format_ms(o.stats.wall_time.as_micros() as u64))
}

fn emit(out: &mut dyn Write, g: &Graph, path: &Option<PathBuf>) -> CliResult {
    let text = serialize(g);
    match path {
        Some(p) => write_atomic(p, text.as_bytes()).map_err(|e| data(format!("{}: {e}", p.display())))?,
        None => out.write_all(text.as_bytes()).map_err(io_out)?,
    }
    Ok(EXIT_OK)
}

fn cmd_gen(g: GenCmd, out: &mut dyn Write) -> CliResult {
    match g {
        GenCmd::Random { n, density, m, seed, out: path } => {
            let m = match (density, m) {
                (Some(d), _) => instance_io::density_to_edges(n, d).map_err(usage)?,
                (None, Some(m)) => m,
                (None, None) => unreachable!("clap requires one of --density or --m"),
            };
            let graph = instance_io::gen_random(n, m, seed).map_err(usage)?;
            emit(out, &graph, &path)
        }
        GenCmd::Wheel { n, out: path } => emit(out, &instance_io::gen_wheel(n).map_err(usage)?, &path),
    }
}

fn cmd_check(a: CheckArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let inst = load_instance(&a.inst, err)?;
    let opts = PreprocessOptions {
        domain_reduction: a.report,
        symmetry: a.report,
        valid_inequalities: vi_form(a.vi),
        ..PreprocessOptions::default()
    };
    let report = preprocess(&inst, &opts);
    if a.report {
        out.write_all(report.to_text().as_bytes()).map_err(io_out)?;
    } else {
        writeln!(out, "{}", report.verdict).map_err(io_out)?;
    }
    Ok(if report.verdict.is_infeasible() { EXIT_INFEASIBLE } else { EXIT_OK })
}

fn cmd_solve(a: SolveArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let inst = load_instance(&a.inst, err)?;
    if a.limit == Some(0) {
        return Err(usage("--limit must be at least 1"));
    }
    if a.limit.is_some() && !a.all {
        return Err(usage("--limit requires --all"));
    }
    let vi = vi_form(a.vi);
    let cfg = SolveConfig {
        use_checks: !a.no_checks,
        use_domain_reduction: !a.no_domain_reduction,
        use_symmetry: !a.no_symmetry,
        use_valid_inequalities: vi.is_some(),
        vi_form: vi.unwrap_or(ViForm::Span),
        mode: if a.all { Mode::EnumerateAll(a.limit.unwrap_or(usize::MAX)) } else { Mode::FindOne },
        ..search_config(&a.search)?
    };
    let o = solve(&inst, &cfg).map_err(usage)?;
    writeln!(out, "status {}", o.status.name()).map_err(io_out)?;
    for ord in &o.orders {
        writeln!(out, "{}", order_line(ord)).map_err(io_out)?;
    }
    if a.all {
        writeln!(out, "count {}", o.count).map_err(io_out)?;
        writeln!(out, "complete {}", o.complete).map_err(io_out)?;
    }
    print_stats(out, &o).map_err(io_out)?;
    Ok(status_code(o.status))
}

fn parse_order(text: &str) -> Result<Vec<usize>, CliError> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<usize>().map_err(|_| usage(format!("bad vertex `{t}` in --order"))))
        .collect()
}

fn cmd_verify(a: VerifyArgs, out: &mut dyn Write) -> CliResult {
    let inst = load_instance(&a.inst, &mut io::sink())?;
    let order = DmdgpOrder::new(parse_order(&a.order)?).map_err(usage)?;
    let ok = verify_order(&inst, &order).map_err(usage)?;
    writeln!(out, "{}", if ok { "valid" } else { "invalid" }).map_err(io_out)?;
    Ok(if ok { EXIT_OK } else { EXIT_INFEASIBLE })
}

fn cmd_enumerate(a: EnumerateArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let inst = load_instance(&a.inst, err)?;
    if a.limit == Some(0) {
        return Err(usage("--limit must be at least 1"));
    }
    let shown = if a.count_only { 0 } else { a.limit.unwrap_or(usize::MAX) };
    if a.oracle {
        if inst.n() > ENUMERATION_WARN_N {
            let _ = writeln!(err, "ctop: warning: brute-force enumeration on {} vertices may be slow", inst.n());
        }
        let e = enumerate_orders(&inst, shown);
        for o in &e.orders {
            writeln!(out, "{}", order_line(o)).map_err(io_out)?;
        }
        writeln!(out, "count {}", e.count).map_err(io_out)?;
        return Ok(if e.count > 0 { EXIT_OK } else { EXIT_INFEASIBLE });
    }
    let base = SolveConfig { use_symmetry: false, ..search_config(&a.search)? };
    if shown > 0 {
        let listed = solve(&inst, &SolveConfig { mode: Mode::EnumerateAll(shown), ..base.clone() }).map_err(usage)?;
        for o in &listed.orders {
            writeln!(out, "{}", order_line(o)).map_err(io_out)?;
        }
        if listed.complete || listed.status == Status::Timeout {
            writeln!(out, "count {}", listed.count).map_err(io_out)?;
            if !listed.complete {
                writeln!(out, "complete false").map_err(io_out)?;
            }
            return Ok(status_code(listed.status));
        }
    }
    let counted = solve(&inst, &SolveConfig { mode: Mode::Count, ..base }).map_err(usage)?;
    writeln!(out, "count {}", counted.count).map_err(io_out)?;
    if !counted.complete {
        writeln!(out, "complete false").map_err(io_out)?;
        return Ok(EXIT_TIMEOUT);
    }
    Ok(status_code(counted.status))
}

fn cmd_bench(a: BenchArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    if a.k == 0 {
        return Err(usage("--k must be at least 1"));
    }
    let limit = time_limit(a.time_limit)?;
    let mut flag_sets = Vec::new();
    for f in &a.flags {
        let set = FlagSet::preset(f)
            .ok_or_else(|| usage(format!("unknown flag set `{f}` (expected one of {})", PRESETS.join(", "))))?;
        flag_sets.push(set);
    }
    let instances = discover(&a.dir).map_err(|e| data(format!("{}: {e}", a.dir.display())))?;
    if instances.is_empty() {
        return Err(usage(format!("no .ctop files in {}", a.dir.display())));
    }
    let configs: Vec<BenchConfig> = a
        .models
        .iter()
        .flat_map(|&m| flag_sets.iter().map(move |f| BenchConfig { model: m.into(), flags: f.clone() }))
        .collect();
    let jobs = a.jobs.unwrap_or_else(|| std::thread::available_parallelism().map(|p| p.get()).unwrap_or(1));
    if jobs == 0 {
        return Err(usage("--jobs must be at least 1"));
    }
    let spec = BenchSpec { instances, configs, k: a.k, time_limit: limit, jobs };
    let started = SystemTime::now();
    let result = run_bench(&spec);
    for e in &result.errors {
        let _ = writeln!(err, "ctop: data error: {e}");
    }
    let points = write_outputs(&a.out, &spec, &result, started).map_err(data)?;
    writeln!(out, "runs {}", result.records.len()).map_err(io_out)?;
    let mut seen = Vec::new();
    for r in &result.records {
        let label = r.config_label();
        if seen.contains(&label) {
            continue;
        }
        let frac = final_fraction(&points, &label).unwrap_or(0.0);
        writeln!(out, "solved {label} {frac:.3}").map_err(io_out)?;
        seen.push(label);
    }
    writeln!(out, "wrote {}", a.out.display()).map_err(io_out)?;
    Ok(EXIT_OK)
}
