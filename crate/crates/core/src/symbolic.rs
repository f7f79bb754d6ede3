//! Symbol statistics: k-distributions, entropy, Bowen counts, and block
//! entropies of systole codings of the `a₁`-orbit.
//!
//! Logarithms are natural throughout.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::empirical::Observable;
use crate::error::{input, precondition, range, Result};
use crate::lattice::{apply_flow, tau_lattice, FlowParams, FLOW_BUDGET};
use crate::realnum::RealSpec;

/// Slack in `H ≤ t` comparisons, so that `t = log k` and `t = 0` include the
/// sequences whose entropy equals `t` in exact arithmetic.
pub const ENTROPY_TIE: f64 = 1e-12;
/// Largest `k^N` enumerated sequence by sequence.
pub const MAX_EXHAUSTIVE: u64 = 100_000_000;

/// A probability vector on `k` symbols.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Distribution {
    pub q: Vec<f64>,
    /// Present when the distribution came from counts.
    #[serde(skip)]
    pub exact: Option<Vec<Ratio<u64>>>,
}

impl Distribution {
    pub fn new(q: Vec<f64>) -> Result<Distribution> {
        if q.is_empty() || q.iter().any(|&x| !(x >= 0.0)) {
            return input("distribution entries must be non-negative");
        }
        let sum: f64 = q.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return input(format!("distribution sums to {sum}, not 1"));
        }
        Ok(Distribution { q, exact: None })
    }

    pub fn from_counts(counts: &[u64]) -> Result<Distribution> {
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return input("no observations");
        }
        Ok(Distribution {
            q: counts.iter().map(|&c| c as f64 / total as f64).collect(),
            exact: Some(counts.iter().map(|&c| Ratio::new(c, total)).collect()),
        })
    }

    pub fn k(&self) -> usize {
        self.q.len()
    }

    /// `λq + (1−λ)q'`
    pub fn mix(&self, other: &Distribution, lambda: f64) -> Result<Distribution> {
        if self.k() != other.k() {
            return input("mixing distributions on different alphabets");
        }
        let q: Vec<f64> = self.q.iter().zip(&other.q).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect();
        Distribution::new(q)
    }
}

/// A nonempty word over `{1, …, k}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolSequence {
    symbols: Vec<u32>,
    k: u32,
}

impl SymbolSequence {
    pub fn new(symbols: Vec<u32>, k: u32) -> Result<SymbolSequence> {
        if symbols.is_empty() {
            return input("empty symbol sequence");
        }
        if let Some(&s) = symbols.iter().find(|&&s| s == 0 || s > k) {
            return input(format!("symbol {s} outside 1..={k}"));
        }
        Ok(SymbolSequence { symbols, k })
    }

    pub fn symbols(&self) -> &[u32] {
        &self.symbols
    }

    pub fn concat(&self, other: &SymbolSequence) -> Result<SymbolSequence> {
        let mut v = self.symbols.clone();
        v.extend_from_slice(&other.symbols);
        SymbolSequence::new(v, self.k.max(other.k))
    }
}

/// `dist(c)_i = |{n : c_n = i}| / N`
pub fn dist(c: &SymbolSequence) -> Distribution {
    let mut counts = vec![0u64; c.k as usize];
    for &s in &c.symbols {
        counts[s as usize - 1] += 1;
    }
    Distribution::from_counts(&counts).expect("nonempty sequence")
}

/// `H(q) = −Σ q_i log q_i` with `0·log 0 = 0`.
pub fn entropy(q: &Distribution) -> f64 {
    match &q.exact {
        Some(r) => {
            let total = r.iter().fold(1u64, |acc, x| acc.lcm(x.denom()));
            let counts: Vec<u64> = r.iter().map(|x| x.numer() * (total / x.denom())).collect();
            entropy_from_counts(&counts)
        }
        None => -q.q.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>(),
    }
}

/// Entropy of the empirical distribution with the given counts, computed as
/// `log N − (1/N) Σ c log c`. Both Bowen counting modes go through here so
/// their `H ≤ t` decisions coincide.
pub fn entropy_from_counts(counts: &[u64]) -> f64 {
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    let s: f64 = counts.iter().filter(|&&c| c > 1).map(|&c| c as f64 * (c as f64).ln()).sum();
    (nf.ln() - s / nf).max(0.0)
}

fn within(counts: &[u64], t: f64) -> bool {
    entropy_from_counts(counts) <= t + ENTROPY_TIE
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BowenMode {
    /// Every word of `{1..k}^N`.
    Exhaustive,
    /// Multinomial coefficients per composition of `N`.
    TypeClass,
}

/// `|R(k,N,t)| = |{c ∈ {1..k}^N : H(dist(c)) ≤ t}|`
pub fn bowen_count(k: u32, big_n: u32, t: f64, mode: BowenMode) -> Result<BigUint> {
    if k == 0 || big_n == 0 {
        return precondition("k and N must be positive");
    }
    match mode {
        BowenMode::Exhaustive => {
            let total = (k as u64).checked_pow(big_n).filter(|&x| x <= MAX_EXHAUSTIVE);
            if total.is_none() {
                return range(format!("k^N = {k}^{big_n} exceeds {MAX_EXHAUSTIVE}"));
            }
            Ok(BigUint::from(exhaustive(k, big_n, t)))
        }
        BowenMode::TypeClass => Ok(type_classes(k, big_n, t)),
    }
}

fn exhaustive(k: u32, big_n: u32, t: f64) -> u64 {
    // split on a prefix so the parallel pieces are even
    let mut depth = 0;
    while depth < big_n && (k as u64).pow(depth) < 256 {
        depth += 1;
    }
    let prefixes = (k as u64).pow(depth);
    (0..prefixes)
        .into_par_iter()
        .map(|p| {
            let mut counts = vec![0u64; k as usize];
            let mut x = p;
            for _ in 0..depth {
                counts[(x % k as u64) as usize] += 1;
                x /= k as u64;
            }
            walk(&mut counts, big_n - depth, t)
        })
        .sum()
}

/// Counts the words extending the current prefix, one symbol at a time.
fn walk(counts: &mut [u64], left: u32, t: f64) -> u64 {
    if left == 0 {
        return within(counts, t) as u64;
    }
    let mut acc = 0;
    for i in 0..counts.len() {
        counts[i] += 1;
        acc += walk(counts, left - 1, t);
        counts[i] -= 1;
    }
    acc
}

fn compositions(k: usize, n: u64, prefix: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
    if prefix.len() + 1 == k {
        prefix.push(n);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for c in 0..=n {
        prefix.push(c);
        compositions(k, n - c, prefix, out);
        prefix.pop();
    }
}

fn multinomial(counts: &[u64], fact: &[BigUint]) -> BigUint {
    let n: u64 = counts.iter().sum();
    let mut den = BigUint::one();
    for &c in counts {
        den *= &fact[c as usize];
    }
    &fact[n as usize] / den
}

fn type_classes(k: u32, big_n: u32, t: f64) -> BigUint {
    let n = big_n as u64;
    let mut fact = vec![BigUint::one()];
    for i in 1..=n {
        let next = &fact[i as usize - 1] * BigUint::from(i);
        fact.push(next);
    }
    let mut all = Vec::new();
    compositions(k as usize, n, &mut Vec::new(), &mut all);
    all.par_iter()
        .filter(|c| within(c, t))
        .map(|c| multinomial(c, &fact))
        .reduce(BigUint::zero, |a, b| a + b)
}

fn ser_display<T: std::fmt::Display, S: Serializer>(x: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(x)
}

/// Natural log of a big integer.
pub fn ln_big(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    match x.to_f64() {
        Some(v) if v.is_finite() => v.ln(),
        _ => {
            let shift = x.bits() - 64;
            (x >> shift).to_f64().unwrap_or(f64::NAN).ln() + shift as f64 * std::f64::consts::LN_2
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BowenRow {
    pub n: u32,
    #[serde(serialize_with = "ser_display")]
    pub count: BigUint,
    /// `(1/N) log |R|`
    pub rate: f64,
    /// `t + k·log(N+1)/N`
    pub envelope: f64,
    pub ok: bool,
}

/// `(1/N) log|R(k,N,t)|` against the type-counting envelope for
/// `N = 1..=N_max`.
pub fn bowen_bound_check(k: u32, n_max: u32, t: f64) -> Result<Vec<BowenRow>> {
    (1..=n_max)
        .map(|n| {
            let fits = (k as u64).checked_pow(n).is_some_and(|x| x <= MAX_EXHAUSTIVE);
            let mode = if fits { BowenMode::Exhaustive } else { BowenMode::TypeClass };
            let count = bowen_count(k, n, t, mode)?;
            let rate = ln_big(&count) / n as f64;
            let envelope = t + k as f64 * ((n + 1) as f64).ln() / n as f64;
            Ok(BowenRow { n, ok: rate <= envelope, count, rate, envelope })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CodingRow {
    /// `a₂`-index of the row.
    pub n: u32,
    /// Bin of `a₁^m a₂^n τ_{α,β}ℤ³` for `0 ≤ m < N + M − 1`.
    pub symbols: Vec<usize>,
    /// Entropy of the distribution of the `N` blocks of length `M`.
    pub block_entropy: f64,
    /// `block_entropy / M`
    pub rate: f64,
    /// Share of `m < N` landing in the cusp bin.
    pub cusp_fraction: f64,
    /// Whether `rate` is below the supplied threshold.
    pub below: Option<bool>,
    pub boundary_points: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrbitCoding {
    pub big_n: u32,
    pub block: u32,
    pub thresholds: Vec<f64>,
    pub rows: Vec<CodingRow>,
}

/// Codes each row `a₂^n τ_{α,β}ℤ³` (`n < N`) of the `a₁`-orbit by systole bins
/// and reports the per-row entropy rate of its length-`M` blocks.
///
/// The systole bins stand in for a partition into compact shells plus a cusp
/// piece; they are a computable proxy, not a partition with small boundary.
pub fn orbit_coding(
    alpha: &RealSpec,
    beta: &RealSpec,
    big_n: u32,
    block: u32,
    thresholds: &[f64],
    flag_below: Option<f64>,
) -> Result<OrbitCoding> {
    if big_n == 0 || block == 0 {
        return precondition("N and M must be positive");
    }
    let obs = Observable::SystoleBins(thresholds.to_vec());
    obs.validate()?;
    let reach = (big_n + block - 2) as f64 + (big_n - 1) as f64;
    if reach > FLOW_BUDGET {
        return range(format!("flow time {reach} exceeds the budget {FLOW_BUDGET}"));
    }
    let base = tau_lattice(alpha, beta);
    let steps = big_n + block - 1;
    let rows = (0..big_n)
        .into_par_iter()
        .map(|n| {
            let mut symbols = Vec::with_capacity(steps as usize);
            let mut boundary_points = 0;
            for m in 0..steps {
                let x = apply_flow(&base, FlowParams { s: m as f64, t: n as f64 })?;
                let (b, edge) = obs.classify(&x)?;
                symbols.push(b);
                boundary_points += edge as u32;
            }
            let mut blocks: BTreeMap<&[usize], u64> = BTreeMap::new();
            for m in 0..big_n as usize {
                *blocks.entry(&symbols[m..m + block as usize]).or_default() += 1;
            }
            let counts: Vec<u64> = blocks.into_values().collect();
            let block_entropy = entropy_from_counts(&counts);
            let rate = block_entropy / block as f64;
            let cusp = symbols[..big_n as usize].iter().filter(|&&b| b == 0).count();
            Ok(CodingRow {
                n,
                block_entropy,
                rate,
                cusp_fraction: cusp as f64 / big_n as f64,
                below: flag_below.map(|th| rate < th),
                boundary_points,
                symbols,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OrbitCoding { big_n, block, thresholds: thresholds.to_vec(), rows })
}
