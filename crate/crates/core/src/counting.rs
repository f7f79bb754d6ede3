//! Exact counting of `n ≤ N` with `n⟨nα⟩⟨nβ⟩` below a rational threshold.
//!
//! The scan keeps `frac(nα)` and `frac(nβ)` as 96-bit fixed-point streams and
//! forms the value in `f64`, together with a rigorous bound `δ` on its error.
//! Any `n` whose value lies within `δ + 2^-40` of the threshold is decided again
//! with certified multiprecision arithmetic, so the fast path never decides a
//! case it cannot prove.

use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{precondition, range, LabError, Result};
use crate::realnum::{
    littlewood_cmp, littlewood_value, working_precision, Decision, Dd, FloatInterval, FracStream,
    Interval, RealSpec, FRAC_BITS,
};

/// Largest `N` accepted by the fixed-point scan.
pub const MAX_N: u64 = 1 << 40;
/// Stored hits are truncated beyond this many entries; counts stay exact.
pub const HIT_CAP: usize = 1_000_000;
/// Work unit of the scan. Fixed so that results do not depend on the thread
/// count.
pub const CHUNK: u64 = 1 << 20;
/// Extra window around the threshold that always triggers an exact recheck.
pub const RECHECK_MARGIN: f64 = 9.094_947_017_729_282e-13; // 2^-40

const ONE: u128 = 1u128 << FRAC_BITS;
const UNIT: f64 = 1.0 / (ONE as f64);
/// `2^-64`: truncation of the 96-bit distance to its top 64 bits.
const TRUNC: f64 = 5.421_010_862_427_522e-20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// `n⟨nα⟩⟨nβ⟩ < ε`
    Strict,
    /// `n⟨nα⟩⟨nβ⟩ ≤ ε`
    Closed,
}

impl std::str::FromStr for Mode {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Mode> {
        match s {
            "strict" => Ok(Mode::Strict),
            "closed" => Ok(Mode::Closed),
            _ => Err(LabError::Input(format!("unknown mode '{s}' (strict|closed)"))),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct CountOptions {
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    /// Keep the list of qualifying `n` (under the report's mode).
    pub store_hits: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Hit {
    pub n: u64,
    pub value: FloatInterval,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CountReport {
    pub alpha: String,
    pub beta: String,
    pub eps: String,
    pub big_n: u64,
    pub mode: Mode,
    pub count_strict: u64,
    pub count_closed: u64,
    /// `n` whose comparison stayed open at the maximal precision.
    pub boundary_cases: Vec<u64>,
    pub hits: Option<Vec<Hit>>,
    pub hits_truncated: bool,
    /// Smallest value seen and where (ties resolved to the smaller `n`).
    pub running_min: Option<Hit>,
    /// How many `n` went through the exact recheck.
    pub exact_rechecks: u64,
    #[serde(skip)]
    pub elapsed_secs: f64,
}

impl CountReport {
    /// The headline count for the report's mode.
    pub fn count(&self) -> u64 {
        match self.mode {
            Mode::Strict => self.count_strict,
            Mode::Closed => self.count_closed,
        }
    }

    pub fn throughput(&self) -> f64 {
        self.big_n as f64 / self.elapsed_secs.max(1e-9)
    }
}

/// Per-chunk scan output; merged in chunk order.
#[derive(Default)]
struct ChunkResult {
    strict: u64,
    closed: u64,
    boundary: Vec<u64>,
    hits: Vec<Hit>,
    rechecks: u64,
    /// Local running-minimum records `(n, value)`.
    records: Vec<(u64, f64)>,
}

struct Scan<'a> {
    alpha: &'a RealSpec,
    beta: &'a RealSpec,
    eps: &'a BigRational,
    eps_f: f64,
    mode: Mode,
    store_hits: bool,
}

impl Scan<'_> {
    fn chunk(&self, start: u64, end: u64) -> ChunkResult {
        let mut out = ChunkResult::default();
        let mut a = FracStream::new(self.alpha, start);
        let mut b = FracStream::new(self.beta, start);
        let err0 = a.error_units().max(b.error_units()) as f64;
        let window = self.eps_f * f64::EPSILON + RECHECK_MARGIN;
        let mut local_min = f64::INFINITY;
        for n in start..end {
            let r1 = distance_f64(a.state());
            let r2 = distance_f64(b.state());
            let nf = n as f64;
            let v = nf * r1 * r2;
            if v < local_min {
                local_min = v;
                out.records.push((n, v));
            }
            // |true r_i − r_i| ≤ e
            let e = (err0 + (n - start) as f64) * UNIT + TRUNC + r1.max(r2) * f64::EPSILON;
            let delta = nf * (r1 * e + r2 * e + e * e) + v * 1e-15;
            let gap = v - self.eps_f;
            if gap.abs() <= delta + window {
                self.recheck(n, &mut out);
            } else if gap < 0.0 {
                out.strict += 1;
                out.closed += 1;
                if self.store_hits {
                    out.hits.push(Hit {
                        n,
                        value: FloatInterval::new((v - delta).max(0.0), v + delta),
                    });
                }
            }
            a.advance();
            b.advance();
        }
        out
    }

    fn recheck(&self, n: u64, out: &mut ChunkResult) {
        out.rechecks += 1;
        let (d, iv) = littlewood_cmp(n, self.alpha, self.beta, self.eps);
        let qualifies = match d {
            Decision::Less => {
                out.strict += 1;
                out.closed += 1;
                true
            }
            Decision::Equal => {
                out.closed += 1;
                self.mode == Mode::Closed
            }
            Decision::Greater => false,
            Decision::Undecided => {
                out.boundary.push(n);
                false
            }
        };
        if qualifies && self.store_hits {
            out.hits.push(Hit {
                n,
                value: iv.to_f64_bounds(),
            });
        }
    }
}

#[inline]
fn distance_f64(state: u128) -> f64 {
    let r = state.min(ONE - state);
    // r ≤ 2^95, so the top bits fit a u64 after dropping 32
    ((r >> 32) as u64) as f64 * TRUNC
}

fn check_eps(eps: &BigRational) -> Result<()> {
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    if *eps <= BigRational::zero() || *eps >= half {
        return precondition("ε must lie in (0, 1/2)");
    }
    Ok(())
}

fn check_n(big_n: u64) -> Result<()> {
    if big_n == 0 {
        return precondition("N must be at least 1");
    }
    if big_n > MAX_N {
        return range(format!("N = {big_n} exceeds the fixed-point budget 2^40"));
    }
    Ok(())
}

fn in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k.max(1))
                .build()
                .map_err(|e| LabError::Input(format!("cannot build thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn chunks(big_n: u64) -> Vec<(u64, u64)> {
    (0..big_n.div_ceil(CHUNK))
        .map(|i| (1 + i * CHUNK, (1 + (i + 1) * CHUNK).min(big_n + 1)))
        .collect()
}

fn scan(
    alpha: &RealSpec,
    beta: &RealSpec,
    eps: &BigRational,
    big_n: u64,
    mode: Mode,
    opts: &CountOptions,
) -> Result<Vec<ChunkResult>> {
    let s = Scan {
        alpha,
        beta,
        eps,
        eps_f: eps.to_f64().unwrap_or(f64::NAN),
        mode,
        store_hits: opts.store_hits,
    };
    let work = chunks(big_n);
    in_pool(opts.threads, || {
        work.par_iter().map(|&(a, b)| s.chunk(a, b)).collect::<Vec<_>>()
    })
}

/// Certified value of `n⟨nα⟩⟨nβ⟩` as an `f64` enclosure.
pub fn certified_value(n: u64, alpha: &RealSpec, beta: &RealSpec) -> FloatInterval {
    littlewood_value(n, alpha, beta, working_precision()).to_f64_bounds()
}

/// Counts `1 ≤ n ≤ N` with `n⟨nα⟩⟨nβ⟩ < ε` and `≤ ε`.
pub fn count_below(
    alpha: &RealSpec,
    beta: &RealSpec,
    eps: &BigRational,
    big_n: u64,
    mode: Mode,
    opts: &CountOptions,
) -> Result<CountReport> {
    check_eps(eps)?;
    count_threshold(alpha, beta, eps, big_n, mode, opts)
}

/// As [`count_below`] but for any positive threshold (used with `ε³`).
pub(crate) fn count_threshold(
    alpha: &RealSpec,
    beta: &RealSpec,
    eps: &BigRational,
    big_n: u64,
    mode: Mode,
    opts: &CountOptions,
) -> Result<CountReport> {
    check_n(big_n)?;
    let started = Instant::now();
    let parts = scan(alpha, beta, eps, big_n, mode, opts)?;
    let mut report = CountReport {
        alpha: alpha.to_string(),
        beta: beta.to_string(),
        eps: format_rational(eps),
        big_n,
        mode,
        count_strict: 0,
        count_closed: 0,
        boundary_cases: Vec::new(),
        hits: opts.store_hits.then(Vec::new),
        hits_truncated: false,
        running_min: None,
        exact_rechecks: 0,
        elapsed_secs: 0.0,
    };
    let mut best: Option<(u64, f64)> = None;
    for p in parts {
        report.count_strict += p.strict;
        report.count_closed += p.closed;
        report.boundary_cases.extend(p.boundary);
        report.exact_rechecks += p.rechecks;
        if let Some(h) = report.hits.as_mut() {
            let room = HIT_CAP.saturating_sub(h.len());
            if p.hits.len() > room {
                report.hits_truncated = true;
            }
            h.extend(p.hits.into_iter().take(room));
        }
        if let Some(&(n, v)) = p.records.last() {
            if best.is_none_or(|b| v < b.1) {
                best = Some((n, v));
            }
        }
    }
    report.running_min = best.map(|(n, _)| Hit {
        n,
        value: certified_value(n, alpha, beta),
    });
    report.elapsed_secs = started.elapsed().as_secs_f64();
    Ok(report)
}

/// `N = ⌈e^{2T}⌉ − 1`, the largest integer below `e^{2T}`.
pub fn horizon(big_t: f64) -> Result<u64> {
    if !(big_t >= 0.0 && big_t.is_finite()) {
        return precondition("T must be finite and non-negative");
    }
    let x = (Dd::from_f64(2.0 * big_t)).exp();
    if x.to_f64() > MAX_N as f64 {
        return range(format!("e^(2T) = {:e} exceeds 2^40", x.to_f64()));
    }
    let c = x.floor();
    // ⌈x⌉ − 1 = ⌊x⌋ unless x is an integer
    let fl = c.to_f64() as u64;
    Ok(if (x - c).to_f64() == 0.0 { fl.saturating_sub(1) } else { fl })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormalizedCount {
    pub big_t: f64,
    pub big_n: u64,
    pub count: u64,
    /// `count / T`
    pub normalized: f64,
    /// `γ/(3 log 2)`, when `γ` was supplied.
    pub comparison: Option<f64>,
    pub boundary_cases: Vec<u64>,
}

/// `|{n < e^{2T} : n⟨nα⟩⟨nβ⟩ < ε}| / T` (or `≤ ε` in closed mode).
pub fn normalized_count(
    alpha: &RealSpec,
    beta: &RealSpec,
    eps: &BigRational,
    big_t: f64,
    mode: Mode,
    gamma: Option<f64>,
    opts: &CountOptions,
) -> Result<NormalizedCount> {
    check_eps(eps)?;
    if big_t <= 0.0 {
        return precondition("T must be positive");
    }
    let big_n = horizon(big_t)?;
    let (count, boundary_cases) = if big_n == 0 {
        (0, Vec::new())
    } else {
        let r = count_below(alpha, beta, eps, big_n, mode, opts)?;
        (r.count(), r.boundary_cases)
    };
    Ok(NormalizedCount {
        big_t,
        big_n,
        count,
        normalized: count as f64 / big_t,
        comparison: gamma.map(|g| g / (3.0 * std::f64::consts::LN_2)),
        boundary_cases,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceEntry {
    pub checkpoint: u64,
    /// Where the minimum over `1..=checkpoint` is attained.
    pub argmin: u64,
    pub value: FloatInterval,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MinTrace {
    pub big_n: u64,
    pub entries: Vec<TraceEntry>,
    /// Every strict improvement of the running minimum, in order.
    pub records: Vec<u64>,
    pub last_improvement: u64,
}

/// Running minimum of `n⟨nα⟩⟨nβ⟩` over `1..=N`, sampled at `checkpoints`.
///
/// Improvements are detected in the fixed-point scan; each reported minimum
/// is then enclosed with certified arithmetic.
pub fn running_min_trace(
    alpha: &RealSpec,
    beta: &RealSpec,
    big_n: u64,
    checkpoints: &[u64],
    threads: Option<usize>,
) -> Result<MinTrace> {
    check_n(big_n)?;
    // a threshold no value reaches: only the records matter
    let never = BigRational::new(BigInt::from(-1), BigInt::one());
    let s = Scan {
        alpha,
        beta,
        eps: &never,
        eps_f: -1.0,
        mode: Mode::Strict,
        store_hits: false,
    };
    let work = chunks(big_n);
    let parts = in_pool(threads, || {
        work.par_iter().map(|&(a, b)| s.chunk(a, b).records).collect::<Vec<_>>()
    })?;
    let mut records: Vec<(u64, f64)> = Vec::new();
    for p in parts {
        for (n, v) in p {
            if records.last().is_none_or(|r| v < r.1) {
                records.push((n, v));
            }
        }
    }
    let mut cps: Vec<u64> = checkpoints.iter().copied().filter(|&c| c >= 1 && c <= big_n).collect();
    cps.sort_unstable();
    cps.dedup();
    let entries = cps
        .into_iter()
        .map(|c| {
            let idx = records.partition_point(|r| r.0 <= c) - 1;
            let n = records[idx].0;
            TraceEntry {
                checkpoint: c,
                argmin: n,
                value: certified_value(n, alpha, beta),
            }
        })
        .collect();
    Ok(MinTrace {
        big_n,
        entries,
        last_improvement: records.last().map(|r| r.0).unwrap_or(1),
        records: records.into_iter().map(|r| r.0).collect(),
    })
}

/// Direct enumeration with certified arithmetic only; the oracle for the
/// fixed-point scan.
pub fn count_exact(
    alpha: &RealSpec,
    beta: &RealSpec,
    eps: &BigRational,
    big_n: u64,
) -> (u64, u64, Vec<u64>) {
    let (mut strict, mut closed, mut boundary) = (0, 0, Vec::new());
    for n in 1..=big_n {
        match littlewood_cmp(n, alpha, beta, eps).0 {
            Decision::Less => {
                strict += 1;
                closed += 1;
            }
            Decision::Equal => closed += 1,
            Decision::Greater => {}
            Decision::Undecided => boundary.push(n),
        }
    }
    (strict, closed, boundary)
}

pub(crate) fn format_rational(q: &BigRational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Enclosure of `n⟨nα⟩⟨nβ⟩` used by callers that need exact endpoints.
pub fn value_interval(n: u64, alpha: &RealSpec, beta: &RealSpec) -> Interval {
    littlewood_value(n, alpha, beta, working_precision())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(p: i64, d: i64) -> BigRational {
        BigRational::new(p.into(), d.into())
    }

    #[test]
    fn rational_pair_small_count() {
        let a = RealSpec::rational(1, 2).unwrap();
        let b = RealSpec::rational(1, 3).unwrap();
        let r = count_below(&a, &b, &q(1, 10), 10, Mode::Strict, &CountOptions {
            store_hits: true,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(r.count_strict, 7);
        let ns: Vec<u64> = r.hits.unwrap().iter().map(|h| h.n).collect();
        assert_eq!(ns, vec![2, 3, 4, 6, 8, 9, 10]);
    }

    #[test]
    fn first_value_of_sqrt_pair_is_above_eleven_hundredths() {
        let a = RealSpec::sqrt(2).unwrap();
        let b = RealSpec::sqrt(3).unwrap();
        let r = count_below(&a, &b, &q(11, 100), 1, Mode::Strict, &CountOptions::default()).unwrap();
        // (√2 − 1)(2 − √3) = 0.110988…
        assert_eq!(r.count_strict, 0);
        let r = count_below(&a, &b, &q(111, 1000), 1, Mode::Strict, &CountOptions::default()).unwrap();
        assert_eq!(r.count_strict, 1);
    }

    #[test]
    fn fast_path_matches_exact_enumeration() {
        let a = RealSpec::sqrt(2).unwrap();
        let b = RealSpec::sqrt(3).unwrap();
        let eps = q(1, 10);
        let r = count_below(&a, &b, &eps, 3000, Mode::Strict, &CountOptions::default()).unwrap();
        let (s, c, bd) = count_exact(&a, &b, &eps, 3000);
        assert_eq!((r.count_strict, r.count_closed), (s, c));
        assert!(bd.is_empty() && r.boundary_cases.is_empty());
    }

    #[test]
    fn equality_is_counted_only_when_closed() {
        // n = 1: ⟨1/2⟩⟨1/4⟩ = 1/8
        let a = RealSpec::rational(1, 2).unwrap();
        let b = RealSpec::rational(1, 4).unwrap();
        let r = count_below(&a, &b, &q(1, 8), 1, Mode::Closed, &CountOptions::default()).unwrap();
        assert_eq!((r.count_strict, r.count_closed), (0, 1));
    }

    #[test]
    fn horizon_is_largest_integer_below() {
        assert_eq!(horizon(0.0).unwrap(), 0);
        assert_eq!(horizon(1.0).unwrap(), 7); // e² = 7.389
        // the f64 nearest to log(10)/2 lies just above it: e^{2T} = 10 + 2e-15
        let t = 0.5 * 10f64.ln();
        assert_eq!(horizon(t).unwrap(), 10);
        assert_eq!(horizon(t.next_down()).unwrap(), 9);
        assert!(horizon(14.0).is_err());
    }

    #[test]
    fn refuses_large_n() {
        let a = RealSpec::sqrt(2).unwrap();
        assert!(count_below(&a, &a, &q(1, 10), MAX_N + 1, Mode::Strict, &CountOptions::default()).is_err());
    }

    #[test]
    fn trace_is_non_increasing() {
        let a = RealSpec::sqrt(2).unwrap();
        let b = RealSpec::sqrt(3).unwrap();
        let t = running_min_trace(&a, &b, 100_000, &[10, 100, 1000, 10_000, 100_000], None).unwrap();
        for w in t.entries.windows(2) {
            assert!(w[1].value.lo <= w[0].value.hi);
        }
    }
}
