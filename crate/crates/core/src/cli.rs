//! Command-line front end: `llab <count|orbit|excursions|measure|entropy|verify>`.
//!
//! Exit codes: 0 when a run completes and every check passes, 1 for usage
//! or input errors, 2 when a check is falsified, 3 when a check could not be
//! decided. Every file is written to a temporary sibling and renamed into
//! place.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::counting::{self, CountOptions, Mode};
use crate::empirical::{self, Observable};
use crate::error::{input, LabError, Result};
use crate::excursions::{self, Excursion, Triangle};
use crate::lattice;
use crate::realnum::{parse_rational, Dd, RealSpec};
use crate::report::{summarize, Check, Status};
use crate::symbolic::{self, BowenMode};

#[derive(Parser, Debug)]
#[command(name = "llab", version, about = "Littlewood counting and diagonal-flow laboratory")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Count n ≤ N (or n < e^{2T}) with n⟨nα⟩⟨nβ⟩ below ε.
    Count(CountArgs),
    /// Systoles of a_{s,t}τ_{α,β}ℤ³ over a grid.
    Orbit(OrbitArgs),
    /// Cusp-excursion triangles meeting [0,T]².
    Excursions(ExcursionArgs),
    /// Escape-fraction bounds and observable averages.
    Measure(MeasureArgs),
    /// Bowen table or orbit-coding entropy rates.
    Entropy(EntropyArgs),
    /// Falsifiable checks with a JSON report.
    #[command(subcommand)]
    Verify(VerifyCommand),
}

#[derive(Args, Debug, Clone)]
pub struct Pair {
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: String,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: String,
}

impl Pair {
    fn parse(&self) -> Result<(RealSpec, RealSpec)> {
        Ok((self.alpha.parse()?, self.beta.parse()?))
    }
}

#[derive(Args, Debug)]
pub struct CountArgs {
    #[command(flatten)]
    pub pair: Pair,
    #[arg(long)]
    pub eps: String,
    #[arg(long = "big-n", conflicts_with = "big_t", required_unless_present = "big_t")]
    pub big_n: Option<u64>,
    #[arg(long = "T")]
    pub big_t: Option<f64>,
    #[arg(long, default_value = "strict")]
    pub mode: String,
    /// Print γ/(3 log 2) next to count/T.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct OrbitArgs {
    #[command(flatten)]
    pub pair: Pair,
    #[arg(long = "T")]
    pub big_t: f64,
    #[arg(long)]
    pub step: f64,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ExcursionArgs {
    #[command(flatten)]
    pub pair: Pair,
    #[arg(long)]
    pub eps: String,
    #[arg(long = "T")]
    pub big_t: f64,
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct MeasureArgs {
    #[command(flatten)]
    pub pair: Pair,
    #[arg(long, required_unless_present = "grid")]
    pub eps: Option<String>,
    #[arg(long = "T")]
    pub big_t: f64,
    #[arg(long, default_value_t = empirical::DEFAULT_DEPTH)]
    pub depth: u32,
    /// Grid step for observable averages.
    #[arg(long, requires = "obs")]
    pub grid: Option<f64>,
    /// `systole:<t1>,<t2>,…`, `xeps:<ε>` or `const`.
    #[arg(long)]
    pub obs: Option<String>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EntropyArgs {
    #[arg(long, requires_all = ["n_max", "t"], conflicts_with_all = ["alpha", "beta"])]
    pub k: Option<u32>,
    #[arg(long = "n-max")]
    pub n_max: Option<u32>,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long, allow_hyphen_values = true, requires_all = ["beta", "big_n", "block", "bins"])]
    pub alpha: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<String>,
    #[arg(long = "N")]
    pub big_n: Option<u32>,
    #[arg(long = "M")]
    pub block: Option<u32>,
    /// Comma-separated systole thresholds.
    #[arg(long)]
    pub bins: Option<String>,
    /// Flag rows whose rate is below this value.
    #[arg(long)]
    pub flag_below: Option<f64>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum VerifyCommand {
    /// Escape of mass ⇒ count of n < e^{2T} with value ≤ ε³.
    Cusp(VerifyCuspArgs),
    /// Triangle membership against the systole at quasi-random flow times.
    Cover(VerifyCoverArgs),
    /// Bowen counts: both counting modes and the finite envelope.
    Bowen(VerifyBowenArgs),
    /// Single-companion sweep and the entropy-constant inequality.
    Lemmas(VerifyLemmasArgs),
}

#[derive(Args, Debug)]
pub struct VerifyCuspArgs {
    #[command(flatten)]
    pub pair: Pair,
    #[arg(long)]
    pub eps: String,
    #[arg(long = "T")]
    pub big_t: f64,
    #[arg(long)]
    pub gamma: f64,
    #[arg(long, default_value_t = empirical::DEFAULT_DEPTH)]
    pub depth: u32,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyCoverArgs {
    #[command(flatten)]
    pub pair: Pair,
    #[arg(long)]
    pub eps: String,
    #[arg(long = "T")]
    pub big_t: f64,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-9)]
    pub margin: f64,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyBowenArgs {
    #[arg(long)]
    pub k: u32,
    #[arg(long = "n-max")]
    pub n_max: u32,
    #[arg(long)]
    pub t: f64,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyLemmasArgs {
    #[command(flatten)]
    pub pair: Pair,
    #[arg(long)]
    pub eps: String,
    #[arg(long = "T")]
    pub big_t: f64,
    #[arg(long = "n-max", default_value_t = 100_000)]
    pub n_max: u64,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

/// Machine-readable outcome of a `verify` run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub command: String,
    pub config: Value,
    pub checks: Vec<Check>,
    pub summary: Status,
    pub data: Value,
}

impl VerifyReport {
    pub fn new(command: &str, config: Value, checks: Vec<Check>, data: Value) -> VerifyReport {
        VerifyReport {
            command: command.to_string(),
            config,
            summary: summarize(&checks),
            checks,
            data,
        }
    }

    pub fn exit_code(&self) -> i32 {
        exit_code(self.summary)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

pub fn exit_code(status: Status) -> i32 {
    match status {
        Status::Pass | Status::NotApplicable => 0,
        Status::Fail => 2,
        Status::Inconclusive => 3,
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| LabError::Io(e.error))?;
    Ok(())
}

fn csv_bytes<R: AsRef<[u8]>>(header: &[&str], rows: impl IntoIterator<Item = Vec<R>>) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner().map_err(|e| LabError::Io(e.into_error()))
}

/// Shortest round-trip decimal of an `f64`.
fn f(x: f64) -> String {
    format!("{x:?}")
}

/// `n` quasi-random points of `[0, 1)²`: the additive recurrence on the
/// plastic number, shifted by a seeded random offset.
pub fn quasi_random_points(n: usize, seed: u64) -> Vec<(f64, f64)> {
    // 1/ρ and 1/ρ² for ρ³ = ρ + 1
    const A1: f64 = 0.754_877_666_246_692_8;
    const A2: f64 = 0.569_840_290_998_053_3;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (u0, v0): (f64, f64) = (rng.gen(), rng.gen());
    (1..=n)
        .map(|i| {
            let i = i as f64;
            ((u0 + i * A1).fract(), (v0 + i * A2).fract())
        })
        .collect()
}

/// SVG of the square `[0, T]²` with every clipped triangle, labeled by `n`.
pub fn emit_svg(items: &[(u64, Triangle)], big_t: f64) -> String {
    const SIDE: f64 = 600.0;
    const PAD: f64 = 20.0;
    let scale = SIDE / big_t;
    // t grows upward
    let px = |(s, t): (f64, f64)| (PAD + s * scale, PAD + SIDE - t * scale);
    let mut out = String::new();
    let full = SIDE + 2.0 * PAD;
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{full:.4}\" height=\"{full:.4}\" viewBox=\"0 0 {full:.4} {full:.4}\">"
    );
    let _ = writeln!(
        out,
        "<rect x=\"{PAD:.4}\" y=\"{PAD:.4}\" width=\"{SIDE:.4}\" height=\"{SIDE:.4}\" fill=\"none\" stroke=\"black\"/>"
    );
    for (n, tri) in items {
        let poly = tri.clip(big_t);
        if poly.is_empty() {
            continue;
        }
        let pts: Vec<String> = poly
            .iter()
            .map(|&p| {
                let (x, y) = px(p);
                format!("{x:.4},{y:.4}")
            })
            .collect();
        let _ = writeln!(
            out,
            "<polygon points=\"{}\" fill=\"#4477aa\" fill-opacity=\"0.35\" stroke=\"#224466\"/>",
            pts.join(" ")
        );
        let k = poly.len() as f64;
        let c = (poly.iter().map(|p| p.0).sum::<f64>() / k, poly.iter().map(|p| p.1).sum::<f64>() / k);
        let (x, y) = px(c);
        let _ = writeln!(out, "<text x=\"{x:.4}\" y=\"{y:.4}\" font-size=\"10\" text-anchor=\"middle\">{n}</text>");
    }
    out.push_str("</svg>\n");
    out
}

/// Parses argv (including the program name) and runs the command.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    let mut stdout = std::io::stdout().lock();
    match execute(&cli, &mut stdout) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

/// Runs a parsed command, writing the human-readable summary to `out`.
pub fn execute(cli: &Cli, out: &mut dyn std::io::Write) -> Result<i32> {
    match cli.threads {
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k.max(1))
                .build()
                .map_err(|e| LabError::Input(format!("cannot build thread pool: {e}")))?;
            let mut buf = Vec::new();
            let code = pool.install(|| dispatch(&cli.command, &mut buf))?;
            out.write_all(&buf)?;
            Ok(code)
        }
        None => dispatch(&cli.command, out),
    }
}

fn dispatch(cmd: &Command, out: &mut dyn std::io::Write) -> Result<i32> {
    match cmd {
        Command::Count(a) => cmd_count(a, out),
        Command::Orbit(a) => cmd_orbit(a, out),
        Command::Excursions(a) => cmd_excursions(a, out),
        Command::Measure(a) => cmd_measure(a, out),
        Command::Entropy(a) => cmd_entropy(a, out),
        Command::Verify(v) => {
            let report = match v {
                VerifyCommand::Cusp(a) => verify_cusp(a)?,
                VerifyCommand::Cover(a) => verify_cover(a)?,
                VerifyCommand::Bowen(a) => verify_bowen(a)?,
                VerifyCommand::Lemmas(a) => verify_lemmas(a)?,
            };
            for c in &report.checks {
                writeln!(out, "{:<28} {:<14} {}", c.name, status_word(c.status), c.detail)?;
            }
            writeln!(out, "summary: {}", status_word(report.summary))?;
            let path = match v {
                VerifyCommand::Cusp(a) => &a.report,
                VerifyCommand::Cover(a) => &a.report,
                VerifyCommand::Bowen(a) => &a.report,
                VerifyCommand::Lemmas(a) => &a.report,
            };
            if let Some(p) = path {
                write_atomic(p, report.to_json()?.as_bytes())?;
            }
            if let VerifyCommand::Bowen(a) = v {
                if let Some(p) = &a.csv {
                    write_atomic(p, &bowen_csv(&report)?)?;
                }
            }
            Ok(report.exit_code())
        }
    }
}

fn status_word(s: Status) -> &'static str {
    match s {
        Status::Pass => "pass",
        Status::Fail => "fail",
        Status::Inconclusive => "inconclusive",
        Status::NotApplicable => "not_applicable",
    }
}

fn positive_t(t: f64) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return input("T must be positive and finite");
    }
    Ok(t)
}

fn cmd_count(a: &CountArgs, out: &mut dyn std::io::Write) -> Result<i32> {
    let (alpha, beta) = a.pair.parse()?;
    let eps = parse_rational(&a.eps)?;
    let mode: Mode = a.mode.parse()?;
    let big_n = match (a.big_n, a.big_t) {
        (Some(n), _) => n,
        (None, Some(t)) => counting::horizon(positive_t(t)?)?,
        (None, None) => return input("give --big-n or --T"),
    };
    let opts = CountOptions { threads: None, store_hits: a.csv.is_some() };
    let r = counting::count_below(&alpha, &beta, &eps, big_n.max(1), mode, &opts)?;
    writeln!(out, "N = {}", r.big_n)?;
    writeln!(out, "count_strict = {}", r.count_strict)?;
    writeln!(out, "count_closed = {}", r.count_closed)?;
    writeln!(out, "boundary_cases = {:?}", r.boundary_cases)?;
    if let Some(m) = &r.running_min {
        writeln!(out, "running_min = {} at n = {}", f(m.value.mid()), m.n)?;
    }
    if let Some(t) = a.big_t {
        writeln!(out, "count/T = {}", f(r.count() as f64 / t))?;
        if let Some(g) = a.gamma {
            writeln!(out, "gamma/(3 log 2) = {}", f(g / excursions::DOUBLING_COST))?;
        }
    }
    if let Some(p) = &a.csv {
        if r.hits_truncated {
            eprintln!("warning: hit list truncated at {}", counting::HIT_CAP);
        }
        let rows = r
            .hits
            .iter()
            .flatten()
            .map(|h| vec![h.n.to_string(), f(h.value.lo), f(h.value.hi)])
            .chain(std::iter::once(vec![
                "total".to_string(),
                r.count_strict.to_string(),
                r.count_closed.to_string(),
            ]));
        write_atomic(p, &csv_bytes(&["n", "value_lo", "value_hi"], rows)?)?;
    }
    Ok(0)
}

fn cmd_orbit(a: &OrbitArgs, out: &mut dyn std::io::Write) -> Result<i32> {
    let (alpha, beta) = a.pair.parse()?;
    let trace = lattice::orbit_trace(&alpha, &beta, a.big_t, a.step)?;
    let m = trace.min();
    writeln!(out, "points = {}", trace.points.len())?;
    writeln!(
        out,
        "min systole = [{}, {}] at (s, t) = ({}, {}) coeffs {:?}",
        f(m.systole.norm.lo),
        f(m.systole.norm.hi),
        f(m.s),
        f(m.t),
        m.systole.coeffs
    )?;
    if let Some(p) = &a.csv {
        let rows = trace.points.iter().map(|q| {
            let c = q.systole.coeffs;
            vec![
                f(q.s),
                f(q.t),
                f(q.systole.norm.lo),
                f(q.systole.norm.hi),
                c[0].to_string(),
                c[1].to_string(),
                c[2].to_string(),
            ]
        });
        write_atomic(p, &csv_bytes(&["s", "t", "systole_lo", "systole_hi", "n", "m1", "m2"], rows)?)?;
    }
    Ok(0)
}

/// CSV rows of the excursion table with Ξ membership and class ids.
pub fn excursion_rows(list: &[Excursion], big_t: f64) -> Result<Vec<Vec<String>>> {
    let proj = excursions::projections(list, big_t)?;
    let max_i = excursions::maximal_intervals(&proj.iter().map(|m| (m.lo, m.hi)).collect::<Vec<_>>());
    let xi: Vec<_> = max_i.kept.iter().map(|&i| proj[i]).collect();
    let classes = excursions::equivalence_classes(&xi);
    let class_of = |n: u64| classes.iter().find(|c| c.members.contains(&n)).map(|c| c.id);
    Ok(list
        .iter()
        .zip(&proj)
        .enumerate()
        .map(|(i, (e, p))| {
            let in_xi = max_i.kept.binary_search(&i).is_ok();
            vec![
                e.n.to_string(),
                e.m1.to_string(),
                e.m2.to_string(),
                f(e.r1.mid()),
                f(e.r2.mid()),
                f(e.leg),
                f(p.lo),
                f(p.hi),
                in_xi.to_string(),
                if in_xi { class_of(e.n).map(|c| c.to_string()).unwrap_or_default() } else { String::new() },
            ]
        })
        .collect())
}

pub const EXCURSION_HEADER: [&str; 10] =
    ["n", "m1", "m2", "r1", "r2", "leg", "proj_lo", "proj_hi", "in_Xi", "class_id"];

fn cmd_excursions(a: &ExcursionArgs, out: &mut dyn std::io::Write) -> Result<i32> {
    let (alpha, beta) = a.pair.parse()?;
    let eps = parse_rational(&a.eps)?;
    let big_t = positive_t(a.big_t)?;
    let list = excursions::all_excursions(&alpha, &beta, &eps, big_t)?;
    writeln!(out, "excursions = {}", list.len())?;
    for e in list.iter().take(20) {
        writeln!(out, "n = {:>12}  leg = {:.6}", e.n, e.leg)?;
    }
    if list.len() > 20 {
        writeln!(out, "…")?;
    }
    if let Some(p) = &a.csv {
        write_atomic(p, &csv_bytes(&EXCURSION_HEADER, excursion_rows(&list, big_t)?)?)?;
    }
    if let Some(p) = &a.svg {
        let items: Vec<(u64, Triangle)> = list.iter().map(|e| (e.n, e.triangle)).collect();
        write_atomic(p, emit_svg(&items, big_t).as_bytes())?;
    }
    Ok(0)
}

/// `systole:<t1>,<t2>,…`, `xeps:<ε>` or `const`.
pub fn parse_observable(text: &str) -> Result<Observable> {
    let t = text.trim();
    if t == "const" {
        return Ok(Observable::Constant);
    }
    if let Some(rest) = t.strip_prefix("systole:") {
        return Ok(Observable::SystoleBins(parse_list(rest)?));
    }
    if let Some(rest) = t.strip_prefix("xeps:") {
        return Ok(Observable::IndicatorXEps(parse_rational(rest)?));
    }
    input(format!("unknown observable '{t}' (systole:…, xeps:…, const)"))
}

fn parse_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| LabError::Input(format!("bad number '{s}'"))))
        .collect()
}

fn cmd_measure(a: &MeasureArgs, out: &mut dyn std::io::Write) -> Result<i32> {
    let (alpha, beta) = a.pair.parse()?;
    let big_t = positive_t(a.big_t)?;
    let mut rows: Vec<Vec<String>> = Vec::new();
    if let Some(e) = &a.eps {
        let eps = parse_rational(e)?;
        let b = empirical::escape_fraction(&alpha, &beta, &eps, big_t, a.depth)?;
        writeln!(out, "lower = {}", f(b.lower))?;
        writeln!(out, "upper = {}", f(b.upper))?;
        writeln!(out, "unresolved = {}", f(b.unresolved_area))?;
        rows.push(vec!["escape".into(), "lower".into(), f(b.lower)]);
        rows.push(vec!["escape".into(), "upper".into(), f(b.upper)]);
        rows.push(vec!["escape".into(), "unresolved_area".into(), f(b.unresolved_area)]);
    }
    if let (Some(h), Some(o)) = (a.grid, &a.obs) {
        let obs = parse_observable(o)?;
        let avg = empirical::observable_average(&alpha, &beta, big_t, h, &obs)?;
        for (i, v) in avg.fine.fractions.iter().enumerate() {
            writeln!(out, "bin {i} = {}", f(*v))?;
            rows.push(vec!["observable".into(), format!("bin{i}"), f(*v)]);
        }
        writeln!(out, "delta = {}", f(avg.delta))?;
        rows.push(vec!["observable".into(), "delta".into(), f(avg.delta)]);
    }
    if let Some(p) = &a.csv {
        write_atomic(p, &csv_bytes(&["quantity", "field", "value"], rows)?)?;
    }
    Ok(0)
}

fn cmd_entropy(a: &EntropyArgs, out: &mut dyn std::io::Write) -> Result<i32> {
    if let (Some(k), Some(n_max), Some(t)) = (a.k, a.n_max, a.t) {
        let table = symbolic::bowen_bound_check(k, n_max, t)?;
        let mut ok = true;
        let mut rows = Vec::new();
        for r in &table {
            writeln!(out, "N = {:>3}  |R| = {:>12}  rate = {:.6}  envelope = {:.6}", r.n, r.count, r.rate, r.envelope)?;
            ok &= r.ok;
            rows.push(vec![r.n.to_string(), r.count.to_string(), f(r.rate), f(r.envelope), r.ok.to_string()]);
        }
        if let Some(p) = &a.csv {
            write_atomic(p, &csv_bytes(&["N", "count", "rate", "envelope", "ok"], rows)?)?;
        }
        return Ok(if ok { 0 } else { 2 });
    }
    let (Some(al), Some(be), Some(n), Some(m), Some(bins)) = (&a.alpha, &a.beta, a.big_n, a.block, &a.bins) else {
        return input("give --k --n-max --t, or --alpha --beta --N --M --bins");
    };
    let (alpha, beta): (RealSpec, RealSpec) = (al.parse()?, be.parse()?);
    let coding = symbolic::orbit_coding(&alpha, &beta, n, m, &parse_list(bins)?, a.flag_below)?;
    let mut rows = Vec::new();
    for r in &coding.rows {
        writeln!(out, "row {:>3}  rate = {:.6}  cusp = {:.4}", r.n, r.rate, r.cusp_fraction)?;
        rows.push(vec![
            r.n.to_string(),
            f(r.block_entropy),
            f(r.rate),
            f(r.cusp_fraction),
            r.below.map(|b| b.to_string()).unwrap_or_default(),
        ]);
    }
    if let Some(p) = &a.csv {
        write_atomic(p, &csv_bytes(&["n", "block_entropy", "rate", "cusp_fraction", "below"], rows)?)?;
    }
    Ok(0)
}

fn pair_config(p: &Pair, alpha: &RealSpec, beta: &RealSpec) -> Value {
    json!({ "alpha": p.alpha, "beta": p.beta, "alpha_value": alpha.to_string(), "beta_value": beta.to_string() })
}

fn merge(mut a: Value, b: Value) -> Value {
    if let (Some(x), Value::Object(y)) = (a.as_object_mut(), b) {
        x.extend(y);
    }
    a
}

pub fn verify_cusp(a: &VerifyCuspArgs) -> Result<VerifyReport> {
    let (alpha, beta) = a.pair.parse()?;
    let eps = parse_rational(&a.eps)?;
    let r = excursions::verify_cusp_proposition(&alpha, &beta, &eps, positive_t(a.big_t)?, a.gamma, a.depth)?;
    let config = merge(
        pair_config(&a.pair, &alpha, &beta),
        json!({ "eps": a.eps, "T": a.big_t, "gamma": a.gamma, "depth": a.depth }),
    );
    let data = serde_json::to_value(&r)?;
    Ok(VerifyReport::new("verify cusp", config, r.checks.clone(), data))
}

pub fn verify_cover(a: &VerifyCoverArgs) -> Result<VerifyReport> {
    let (alpha, beta) = a.pair.parse()?;
    let eps = parse_rational(&a.eps)?;
    let big_t = positive_t(a.big_t)?;
    let pts: Vec<(f64, f64)> = quasi_random_points(a.samples, a.seed)
        .into_iter()
        .map(|(u, v)| (u * big_t, v * big_t))
        .collect();
    let r = excursions::cover_check(&alpha, &beta, &eps, big_t, &pts, a.margin)?;
    let detail = match r.disagreements.first() {
        Some(&(s, t, tri, svp)) => format!("(s, t) = ({s:?}, {t:?}): triangles {tri}, systole {svp}"),
        None => format!("{} of {} samples agree", r.agreements, r.samples),
    };
    let checks = vec![Check::new("cover_identity", Status::from_bool(r.disagreements.is_empty()), detail)];
    let config = merge(
        pair_config(&a.pair, &alpha, &beta),
        json!({ "eps": a.eps, "T": a.big_t, "samples": a.samples, "seed": a.seed, "margin": a.margin }),
    );
    Ok(VerifyReport::new("verify cover", config, checks, serde_json::to_value(&r)?))
}

/// Largest `N` checked against the type-class count by full enumeration.
const BOWEN_CROSS_LIMIT: u64 = 1_000_000;

pub fn verify_bowen(a: &VerifyBowenArgs) -> Result<VerifyReport> {
    let table = symbolic::bowen_bound_check(a.k, a.n_max, a.t)?;
    let mut checks = Vec::new();
    let bad = table.iter().find(|r| !r.ok);
    checks.push(Check::new(
        "bowen_envelope",
        Status::from_bool(bad.is_none()),
        match bad {
            Some(r) => format!("N = {}: rate {} > envelope {}", r.n, r.rate, r.envelope),
            None => format!("{} rows", table.len()),
        },
    ));
    let mut mismatch = None;
    let mut compared = 0;
    for n in 1..=a.n_max {
        if (a.k as u64).checked_pow(n).is_none_or(|x| x > BOWEN_CROSS_LIMIT) {
            break;
        }
        let ex = symbolic::bowen_count(a.k, n, a.t, BowenMode::Exhaustive)?;
        let tc = symbolic::bowen_count(a.k, n, a.t, BowenMode::TypeClass)?;
        compared += 1;
        if ex != tc && mismatch.is_none() {
            mismatch = Some(format!("N = {n}: exhaustive {ex} vs type classes {tc}"));
        }
    }
    checks.push(Check::new(
        "bowen_modes_agree",
        if compared == 0 { Status::NotApplicable } else { Status::from_bool(mismatch.is_none()) },
        mismatch.unwrap_or_else(|| format!("N = 1..={compared}")),
    ));
    let config = json!({ "k": a.k, "n_max": a.n_max, "t": a.t });
    Ok(VerifyReport::new("verify bowen", config, checks, json!({ "rows": table })))
}

fn bowen_csv(report: &VerifyReport) -> Result<Vec<u8>> {
    let rows = report.data["rows"]
        .as_array()
        .map(|v| {
            v.iter()
                .map(|r| {
                    ["n", "count", "rate", "envelope", "ok"]
                        .iter()
                        .map(|k| match &r[*k] {
                            Value::String(s) => s.clone(),
                            Value::Number(x) => x.as_f64().filter(|_| !x.is_u64()).map(f).unwrap_or_else(|| x.to_string()),
                            other => other.to_string(),
                        })
                        .collect::<Vec<_>>()
                })
                .collect::<Vec<_>>()
        })
        .unwrap_or_default();
    csv_bytes(&["N", "count", "rate", "envelope", "ok"], rows)
}

/// `3 + 2(4 + log 4)`, the entropy constant multiplying `γ`.
pub fn entropy_constant() -> Dd {
    Dd::from_f64(3.0) + Dd::from_f64(2.0) * (Dd::from_f64(4.0) + Dd::from_f64(4.0).ln())
}

pub fn verify_lemmas(a: &VerifyLemmasArgs) -> Result<VerifyReport> {
    let (alpha, beta) = a.pair.parse()?;
    let eps: BigRational = parse_rational(&a.eps)?;
    let big_t = positive_t(a.big_t)?;
    let sweep = excursions::uniqueness_sweep(&alpha, &beta, &eps, big_t, a.n_max)?;
    let mut checks = vec![Check::new(
        "single_companion",
        Status::from_bool(sweep.violations.is_empty()),
        match sweep.violations.first() {
            Some(n) => format!("n = {n} has {} companions", sweep.max_multiplicity),
            None => format!("max multiplicity {} over n ≤ {}", sweep.max_multiplicity, a.n_max),
        },
    )];
    let c = entropy_constant();
    checks.push(Check::new(
        "entropy_constant",
        Status::from_bool(c.to_f64() < 15.0),
        format!("3 + 2(4 + log 4) = {:.12}", c.to_f64()),
    ));
    let config = merge(
        pair_config(&a.pair, &alpha, &beta),
        json!({ "eps": a.eps, "T": a.big_t, "n_max": a.n_max }),
    );
    let data = json!({ "uniqueness": sweep, "entropy_constant": c.to_f64() });
    Ok(VerifyReport::new("verify lemmas", config, checks, data))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String) {
        let cli = match Cli::try_parse_from(args) {
            Ok(c) => c,
            Err(_) => return (1, String::new()),
        };
        let mut buf = Vec::new();
        let code = execute(&cli, &mut buf).unwrap_or(1);
        (code, String::from_utf8(buf).unwrap())
    }

    #[test]
    fn unknown_flag_is_usage_error() {
        assert_eq!(run(["llab", "count", "--bogus"]), 1);
        assert_eq!(run(["llab", "frobnicate"]), 1);
    }

    #[test]
    fn bowen_verify_passes() {
        let (code, text) = run_capture(&["llab", "verify", "bowen", "--k", "2", "--n-max", "12", "--t", "0.5"]);
        assert_eq!(code, 0, "{text}");
        assert!(text.contains("bowen_envelope"));
    }

    #[test]
    fn count_small_rationals() {
        let (code, text) = run_capture(&[
            "llab", "count", "--alpha", "rat:1/2", "--beta", "rat:1/3", "--eps", "0.1", "--big-n", "10",
        ]);
        assert_eq!(code, 0);
        assert!(text.contains("count_strict = 7"), "{text}");
    }

    #[test]
    fn svg_empty_and_deterministic() {
        let empty = emit_svg(&[], 4.0);
        assert!(empty.contains("<rect") && !empty.contains("<polygon"));
        let t = Triangle { s_max: 3.0, t_max: 5.0, hyp: 2.0, slack: 0.0 };
        let a = emit_svg(&[(7, t)], 4.0);
        assert_eq!(a, emit_svg(&[(7, t)], 4.0));
        assert_eq!(a.matches("<polygon").count(), 1);
        assert!(a.contains(">7</text>"));
    }

    #[test]
    fn quasi_random_points_are_seeded() {
        let a = quasi_random_points(100, 3);
        assert_eq!(a, quasi_random_points(100, 3));
        assert_ne!(a, quasi_random_points(100, 4));
        assert!(a.iter().all(|&(u, v)| (0.0..1.0).contains(&u) && (0.0..1.0).contains(&v)));
    }

    #[test]
    fn entropy_constant_value() {
        // mpmath: 13.772588722239781237668928
        assert!((entropy_constant().to_f64() - 13.772_588_722_239_781).abs() < 1e-12);
    }
}
