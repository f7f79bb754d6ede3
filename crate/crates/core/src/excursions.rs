//! Cusp excursions of `a_{s,t}τ_{α,β}ℤ³`.
//!
//! The vector `(n, m₁, m₂)` is ε-short at flow time `(s, t)` exactly on the
//! isosceles right triangle
//!
//! ```text
//! s ≤ log(ε/r₁),  t ≤ log(ε/r₂),  s + t ≥ log(n/ε),   r₁ = |nα+m₁|, r₂ = |nβ+m₂|
//! ```
//!
//! with leg `log(ε³/(n r₁ r₂))`. Projecting the clipped triangles to `s + t`,
//! keeping the maximal projections, and doubling `n` along them turns a lower
//! bound on the time spent in the cusp into a lower bound on the number of
//! `n < e^{2T}` with `n⟨nα⟩⟨nβ⟩ ≤ ε³`. This module builds every piece of that
//! chain and checks each inequality on the actual data.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::LN_2;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::counting::{self, format_rational, CountOptions, Mode};
use crate::empirical::{self, AreaBound};
use crate::error::{input, precondition, range, Result};
use crate::realnum::{
    littlewood_cmp, working_precision, Decision, Dd, FloatInterval, Interval, RealSpec,
};
use crate::report::{summarize, Check, Status};

/// `3 log 2`: one doubling of `n` costs this much of the projection.
pub const DOUBLING_COST: f64 = 3.0 * LN_2;

/// The region `s ≤ s_max, t ≤ t_max, s + t ≥ hyp`. Each parameter is known to
/// within `slack`. Infinite parameters describe unbounded regions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Triangle {
    pub s_max: f64,
    pub t_max: f64,
    pub hyp: f64,
    pub slack: f64,
}

impl Triangle {
    pub fn leg(&self) -> f64 {
        self.s_max + self.t_max - self.hyp
    }

    /// Closed membership at the nominal parameters.
    pub fn contains(&self, s: f64, t: f64) -> bool {
        s <= self.s_max && t <= self.t_max && s + t >= self.hyp
    }

    /// Distance from `(s, t)` to the nearest of the three boundary lines.
    pub fn boundary_distance(&self, s: f64, t: f64) -> f64 {
        (s - self.s_max)
            .abs()
            .min((t - self.t_max).abs())
            .min((s + t - self.hyp).abs() / std::f64::consts::SQRT_2)
    }

    /// Mirror image across `s = t`.
    pub fn reflect(&self) -> Triangle {
        Triangle {
            s_max: self.t_max,
            t_max: self.s_max,
            ..*self
        }
    }

    /// Whether the triangle meets `[0, T]²`, and whether that verdict is
    /// within the parameter uncertainty.
    pub fn meets_square(&self, big_t: f64) -> (bool, bool) {
        let m = 3.0 * self.slack;
        let a = self.s_max.min(big_t);
        let b = self.t_max.min(big_t);
        let margins = [a, b, a + b - self.hyp];
        let meets = margins.iter().all(|&x| x >= 0.0);
        let uncertain = margins.iter().any(|&x| x.abs() <= m);
        (meets, uncertain)
    }

    /// Vertices of the triangle clipped to `[0, T]²`, counter-clockwise.
    pub fn clip(&self, big_t: f64) -> Vec<(f64, f64)> {
        let mut poly = vec![(0.0, 0.0), (big_t, 0.0), (big_t, big_t), (0.0, big_t)];
        let (sm, tm, h) = (self.s_max, self.t_max, self.hyp);
        poly = clip_half_plane(&poly, |p| sm - p.0);
        poly = clip_half_plane(&poly, |p| tm - p.1);
        poly = clip_half_plane(&poly, |p| p.0 + p.1 - h);
        poly
    }

    /// Area of the clipped polygon.
    pub fn clipped_area(&self, big_t: f64) -> f64 {
        polygon_area(&self.clip(big_t))
    }
}

/// Sutherland–Hodgman step keeping `f ≥ 0`, where `f` is affine.
fn clip_half_plane(poly: &[(f64, f64)], f: impl Fn((f64, f64)) -> f64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let p = poly[i];
        let q = poly[(i + 1) % poly.len()];
        let (fp, fq) = (f(p), f(q));
        if fp >= 0.0 {
            out.push(p);
        }
        if (fp >= 0.0) != (fq >= 0.0) {
            let w = fp / (fp - fq);
            out.push((p.0 + w * (q.0 - p.0), p.1 + w * (q.1 - p.1)));
        }
    }
    out
}

pub fn polygon_area(poly: &[(f64, f64)]) -> f64 {
    let mut a = 0.0;
    for i in 0..poly.len() {
        let (x0, y0) = poly[i];
        let (x1, y1) = poly[(i + 1) % poly.len()];
        a += x0 * y1 - x1 * y0;
    }
    0.5 * a.abs()
}

/// One triangle `d_{ε,n}` meeting `[0, T]²`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Excursion {
    pub n: u64,
    pub m1: i128,
    pub m2: i128,
    /// `|nα + m₁|`
    pub r1: FloatInterval,
    /// `|nβ + m₂|`
    pub r2: FloatInterval,
    /// `n·r₁·r₂`
    pub value: FloatInterval,
    /// `log(ε³/(n r₁ r₂))`
    pub leg: f64,
    pub triangle: Triangle,
    /// Emptiness or the meeting with the square was not certifiable.
    pub boundary: bool,
}

/// The geometry only needs `ε ≤ 1/2`: for irrational `α` the residue
/// `|nα + m|` never equals 1/2, so the nearest companion stays unique.
fn check_eps(eps: &BigRational) -> Result<()> {
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    if *eps <= BigRational::zero() || *eps > half {
        return precondition("ε must lie in (0, 1/2]");
    }
    Ok(())
}

fn check_inputs(alpha: &RealSpec, beta: &RealSpec, eps: &BigRational, big_t: f64) -> Result<()> {
    if alpha.is_rational() || beta.is_rational() {
        return input("α and β must be irrational");
    }
    check_eps(eps)?;
    if !(big_t > 0.0 && big_t.is_finite()) {
        return precondition("T must be positive");
    }
    Ok(())
}

/// Outward `f64` enclosure of `log(x)` for an enclosure `x`.
fn ln_bounds(lo: f64, hi: f64) -> (f64, f64) {
    let a = lo.ln();
    let b = hi.ln();
    let pad = |x: f64| 2.0 * f64::EPSILON * x.abs().max(1.0);
    (a - pad(a), b + pad(b))
}

/// The triangle of a vector with `|x₁| = n`, `|x₂| = r₁`, `|x₃| = r₂`, given
/// enclosures of those and of `ε`.
pub fn triangle_from_bounds(
    n: FloatInterval,
    r1: FloatInterval,
    r2: FloatInterval,
    eps: FloatInterval,
) -> Triangle {
    let ratio = |num: FloatInterval, den: FloatInterval| {
        ((num.lo / den.hi).next_down(), (num.hi / den.lo).next_up())
    };
    let (a0, a1) = ratio(eps, r1);
    let (b0, b1) = ratio(eps, r2);
    let (c0, c1) = ratio(n, eps);
    let s = ln_bounds(a0, a1);
    let t = ln_bounds(b0, b1);
    let h = ln_bounds(c0, c1);
    let half = |x: (f64, f64)| 0.5 * (x.1 - x.0);
    let mid = |x: (f64, f64)| 0.5 * (x.0 + x.1);
    Triangle {
        s_max: mid(s),
        t_max: mid(t),
        hyp: mid(h),
        slack: half(s).max(half(t)).max(half(h)),
    }
}

fn eps_bounds(eps: &BigRational) -> FloatInterval {
    Interval::point(eps.clone()).to_f64_bounds()
}

/// Certified `|n·x + m|`.
fn residue(x: &RealSpec, n: u64, m: &BigInt) -> Interval {
    let nb = BigInt::from(n);
    x.eval(working_precision() + 70).scale(&nb).add_integer(m).abs()
}

fn build(
    n: u64,
    m1: BigInt,
    m2: BigInt,
    alpha: &RealSpec,
    beta: &RealSpec,
    eps: &BigRational,
    big_t: f64,
) -> Result<Option<Excursion>> {
    let r1 = residue(alpha, n, &m1);
    let r2 = residue(beta, n, &m2);
    if r1.lo().is_zero() || r2.lo().is_zero() {
        return precondition(format!("n = {n}: residue not separated from zero"));
    }
    let value = r1.mul(&r2).scale(&BigInt::from(n));
    let cube = eps * eps * eps;
    let mut boundary = false;
    match value.cmp_rational(&cube) {
        Some(std::cmp::Ordering::Greater) => return Ok(None),
        Some(_) => {}
        None => {
            // refine the way the counters do
            match littlewood_cmp(n, alpha, beta, &cube).0 {
                Decision::Greater => return Ok(None),
                Decision::Undecided => boundary = true,
                _ => {}
            }
        }
    }
    let nf = n as f64;
    let triangle = triangle_from_bounds(
        FloatInterval::new(nf, nf),
        r1.to_f64_bounds(),
        r2.to_f64_bounds(),
        eps_bounds(eps),
    );
    let (meets, uncertain) = triangle.meets_square(big_t);
    if !meets {
        return Ok(None);
    }
    let to_i128 = |m: BigInt| m.to_i128().ok_or_else(|| crate::LabError::Range("companion too large".into()));
    Ok(Some(Excursion {
        n,
        m1: to_i128(m1)?,
        m2: to_i128(m2)?,
        r1: r1.to_f64_bounds(),
        r2: r2.to_f64_bounds(),
        value: value.to_f64_bounds(),
        leg: triangle.leg(),
        triangle,
        boundary: boundary || uncertain,
    }))
}

/// The triangle `d_{ε,n}` if it is nonempty and meets `[0, T]²`.
pub fn excursion_for(
    n: u64,
    alpha: &RealSpec,
    beta: &RealSpec,
    eps: &BigRational,
    big_t: f64,
) -> Result<Option<Excursion>> {
    check_inputs(alpha, beta, eps, big_t)?;
    if n == 0 {
        return precondition("n must be positive");
    }
    let nb = BigInt::from(n);
    // a half-integer n·α has residue 1/2 > ε, so the triangle is empty
    let (Some(k1), Some(k2)) = (
        alpha.nearest_integer_of_multiple(&nb),
        beta.nearest_integer_of_multiple(&nb),
    ) else {
        return Ok(None);
    };
    build(n, -k1, -k2, alpha, beta, eps, big_t)
}

/// Result of the exhaustive companion search for one `n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Multiplicity {
    pub n: u64,
    /// Number of `(m₁, m₂)` whose triangle meets `[0, T]²`.
    pub count: u32,
    pub boundary: bool,
}

/// Counts all `(m₁, m₂)` for which `d_{ε,(n,m₁,m₂)}` meets `[0, T]²`.
///
/// Companions with `|nα + m₁| > 1` cannot qualify (`s ≤ log ε < 0`), so the
/// search covers every integer within distance 1 of `−nα` and `−nβ`.
pub fn uniqueness_check(
    n: u64,
    alpha: &RealSpec,
    beta: &RealSpec,
    eps: &BigRational,
    big_t: f64,
) -> Result<Multiplicity> {
    check_inputs(alpha, beta, eps, big_t)?;
    // candidates from an f64 image of n·x; the margin dwarfs its rounding error
    let margin = 1e-6 + n as f64 * 1e-14;
    let eps_f = eps.to_f64().unwrap_or(f64::NAN) + margin;
    let cube = eps.to_f64().unwrap_or(f64::NAN).powi(3);
    let around = |x: &RealSpec| -> Vec<(BigInt, f64)> {
        let y = n as f64 * x.to_f64();
        let lo = y.floor() as i128 - 1;
        let hi = y.ceil() as i128 + 1;
        (lo..=hi)
            .map(|k| (k, (y - k as f64).abs()))
            .filter(|&(_, r)| r <= eps_f)
            .map(|(k, r)| (BigInt::from(-k), r))
            .collect()
    };
    let (c1, c2) = (around(alpha), around(beta));
    let mut out = Multiplicity { n, count: 0, boundary: false };
    for (m1, r1) in &c1 {
        for (m2, r2) in &c2 {
            // certainly n·r₁·r₂ > ε³: the triangle is empty
            let low = n as f64 * (r1 - margin).max(0.0) * (r2 - margin).max(0.0);
            if low > cube * (1.0 + 1e-9) {
                continue;
            }
            if let Some(e) = build(n, m1.clone(), m2.clone(), alpha, beta, eps, big_t)? {
                out.count += 1;
                out.boundary |= e.boundary;
            }
        }
    }
    Ok(out)
}

/// `⌊ε·e^{2T}⌋`: no larger `n` has a triangle meeting `[0, T]²`.
pub fn excursion_horizon(eps: &BigRational, big_t: f64) -> Result<u64> {
    let x = Dd::from_f64(eps.to_f64().unwrap_or(f64::NAN)) * Dd::from_f64(2.0 * big_t).exp();
    let xf = x.to_f64();
    if !xf.is_finite() || xf > counting::MAX_N as f64 {
        return range(format!("ε·e^(2T) = {xf:e} exceeds 2^40"));
    }
    // pad by a relative 1e-15 so rounding in ε never drops a candidate
    Ok((xf * (1.0 + 1e-15)).floor() as u64)
}

/// Every `d_{ε,n}` meeting `[0, T]²`, ascending in `n`.
pub fn all_excursions(
    alpha: &RealSpec,
    beta: &RealSpec,
    eps: &BigRational,
    big_t: f64,
) -> Result<Vec<Excursion>> {
    check_inputs(alpha, beta, eps, big_t)?;
    let big_n = excursion_horizon(eps, big_t)?;
    if big_n == 0 {
        return Ok(Vec::new());
    }
    let cube = eps * eps * eps;
    let report = counting::count_threshold(
        alpha,
        beta,
        &cube,
        big_n,
        Mode::Closed,
        &CountOptions { threads: None, store_hits: true },
    )?;
    from_candidates(alpha, beta, eps, big_t, &report, big_n)
}

fn from_candidates(
    alpha: &RealSpec,
    beta: &RealSpec,
    eps: &BigRational,
    big_t: f64,
    report: &counting::CountReport,
    limit: u64,
) -> Result<Vec<Excursion>> {
    if report.hits_truncated {
        return range("too many near-solutions to list every excursion");
    }
    let mut cands: Vec<u64> = report
        .hits
        .iter()
        .flatten()
        .map(|h| h.n)
        .chain(report.boundary_cases.iter().copied())
        .filter(|&n| n <= limit)
        .collect();
    cands.sort_unstable();
    cands.dedup();
    let mut out = Vec::new();
    for n in cands {
        if let Some(e) = excursion_for(n, alpha, beta, eps, big_t)? {
            out.push(e);
        }
    }
    Ok(out)
}

/// `π(d_{ε,n} ∩ [0,T]²) = [log(n/ε), min(s_max,T) + min(t_max,T)]`.
pub fn project(e: &Excursion, big_t: f64) -> Result<(f64, f64)> {
    project_triangle(&e.triangle, big_t)
}

pub fn project_triangle(tri: &Triangle, big_t: f64) -> Result<(f64, f64)> {
    if !tri.meets_square(big_t).0 {
        return precondition("triangle does not meet the square");
    }
    let top = tri.s_max.min(big_t) + tri.t_max.min(big_t);
    // the square lies in s + t ≥ 0
    let lo = tri.hyp.max(0.0);
    Ok((lo, top.max(lo)))
}

/// The same projection from the vertices of the clipped polygon.
pub fn project_by_vertices(tri: &Triangle, big_t: f64) -> Option<(f64, f64)> {
    let poly = tri.clip(big_t);
    if poly.is_empty() {
        return None;
    }
    let sums = poly.iter().map(|p| p.0 + p.1);
    let lo = sums.clone().fold(f64::INFINITY, f64::min);
    let hi = sums.fold(f64::NEG_INFINITY, f64::max);
    Some((lo, hi))
}

/// A finite union of closed intervals, kept sorted and disjoint.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct IntervalSet {
    parts: Vec<(f64, f64)>,
}

impl IntervalSet {
    pub fn from_intervals(items: impl IntoIterator<Item = (f64, f64)>) -> IntervalSet {
        let mut v: Vec<(f64, f64)> = items.into_iter().filter(|i| i.0 <= i.1).collect();
        v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut parts: Vec<(f64, f64)> = Vec::with_capacity(v.len());
        for (a, b) in v {
            match parts.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => parts.push((a, b)),
            }
        }
        IntervalSet { parts }
    }

    pub fn parts(&self) -> &[(f64, f64)] {
        &self.parts
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Total length.
    pub fn measure(&self) -> f64 {
        self.parts.iter().map(|p| p.1 - p.0).sum()
    }

    pub fn contains(&self, x: f64) -> bool {
        let i = self.parts.partition_point(|p| p.1 < x);
        i < self.parts.len() && self.parts[i].0 <= x
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MaximalIntervals {
    /// Indices (into the input) of the maximal positive-length intervals,
    /// ascending.
    pub kept: Vec<usize>,
    /// `(kept, dropped)` pairs of inputs with identical intervals.
    pub duplicates: Vec<(usize, usize)>,
    pub union_all: IntervalSet,
    pub union_kept: IntervalSet,
}

/// Keeps the positive-length intervals not contained in another one. Among
/// identical intervals the earliest input wins; the others are recorded as
/// duplicates.
pub fn maximal_intervals(items: &[(f64, f64)]) -> MaximalIntervals {
    let mut order: Vec<usize> = (0..items.len()).filter(|&i| items[i].1 > items[i].0).collect();
    order.sort_by(|&i, &j| {
        items[i]
            .0
            .total_cmp(&items[j].0)
            .then(items[j].1.total_cmp(&items[i].1))
            .then(i.cmp(&j))
    });
    let mut kept = Vec::new();
    let mut duplicates = Vec::new();
    let mut reach = f64::NEG_INFINITY;
    let mut last: Option<usize> = None;
    for i in order {
        if items[i].1 > reach {
            reach = items[i].1;
            kept.push(i);
            last = Some(i);
        } else if let Some(k) = last {
            if items[k] == items[i] {
                duplicates.push((k, i));
            }
        }
    }
    kept.sort_unstable();
    MaximalIntervals {
        union_all: IntervalSet::from_intervals(items.iter().copied()),
        union_kept: IntervalSet::from_intervals(kept.iter().map(|&i| items[i])),
        kept,
        duplicates,
    }
}

/// Largest `p` with `p·3log2 ≤ λ`.
pub fn lambda_exponent(lambda: f64) -> u32 {
    if lambda <= 0.0 {
        0
    } else {
        (lambda / DOUBLING_COST).floor() as u32
    }
}

/// `{n·2^p : 0 ≤ p·3log2 ≤ λ}`
pub fn lambda_set(n: u64, lambda: f64) -> Vec<u64> {
    let p_max = lambda_exponent(lambda);
    (0..=p_max)
        .map_while(|p| n.checked_mul(1u64.checked_shl(p)?))
        .collect()
}

/// A member of Ξ: `n` and its projection `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct XiMember {
    pub n: u64,
    pub lo: f64,
    pub hi: f64,
    /// Uncertainty of each endpoint.
    pub slack: f64,
}

impl XiMember {
    pub fn lambda(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExcursionClass {
    pub id: usize,
    /// Ascending.
    pub members: Vec<u64>,
    pub base: u64,
    /// `q_i` with `n_i = 2^{q_i}·n₁`.
    pub exponents: Vec<u32>,
    /// `p_i`: the largest doubling exponent in `Λ(n_i)`.
    pub top_exponents: Vec<u32>,
    /// `⋃ Λ(n_i)`, ascending.
    pub merged: Vec<u64>,
    /// Measure of the union of the members' projections.
    pub pi_length: f64,
    pub pi_length_err: f64,
    /// All members are `n₁` times a power of two.
    pub power_of_two: bool,
    /// `n_{i+1} ≤ 2^{p_i}n_i ≤ 2^{p_{i+1}}n_{i+1}` for consecutive members.
    pub interleaving: bool,
    /// `⋃Λ(n_i) = {2^p n₁ : 0 ≤ p ≤ q_K + p_K}`.
    pub merged_is_full_range: bool,
}

impl ExcursionClass {
    /// `|⋃Λ| ≥ (class π-length)/(3 log 2)`, with the right side certified.
    pub fn counting_bound(&self) -> Status {
        let k = self.merged.len() as f64;
        let hi = (self.pi_length + self.pi_length_err) / DOUBLING_COST * (1.0 + 1e-15);
        let lo = (self.pi_length - self.pi_length_err) / DOUBLING_COST * (1.0 - 1e-15);
        if k >= hi {
            Status::Pass
        } else if k < lo {
            Status::Fail
        } else {
            Status::Inconclusive
        }
    }
}

/// Union–find with path halving.
struct Dsu(Vec<usize>);

impl Dsu {
    fn new(n: usize) -> Dsu {
        Dsu((0..n).collect())
    }
    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

fn split_two(n: u64) -> (u64, u32) {
    let v = n.trailing_zeros();
    (n >> v, v)
}

/// Classes of Ξ under "Λ-sets linked by a chain of intersections".
pub fn equivalence_classes(xi: &[XiMember]) -> Vec<ExcursionClass> {
    let mut dsu = Dsu::new(xi.len());
    // Λ(n) ∩ Λ(n') ≠ ∅ iff the odd parts agree and the exponent ranges overlap
    let mut by_odd: BTreeMap<u64, Vec<(u32, u32, usize)>> = BTreeMap::new();
    for (i, m) in xi.iter().enumerate() {
        let (odd, v) = split_two(m.n);
        by_odd
            .entry(odd)
            .or_default()
            .push((v, v + lambda_exponent(m.lambda()), i));
    }
    for ranges in by_odd.values_mut() {
        ranges.sort_unstable();
        let mut reach = None;
        for k in 0..ranges.len() {
            let (a, b, i) = ranges[k];
            if let Some((r, j)) = reach {
                if a <= r {
                    dsu.union(i, j);
                }
            }
            if reach.is_none_or(|(r, _)| b > r) {
                reach = Some((b, i));
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..xi.len() {
        let r = dsu.find(i);
        groups.entry(r).or_default().push(i);
    }
    let mut classes: Vec<Vec<usize>> = groups.into_values().collect();
    for c in classes.iter_mut() {
        c.sort_by_key(|&i| xi[i].n);
    }
    classes.sort_by_key(|c| xi[c[0]].n);
    classes
        .into_iter()
        .enumerate()
        .map(|(id, idx)| build_class(id, &idx.iter().map(|&i| xi[i]).collect::<Vec<_>>()))
        .collect()
}

fn build_class(id: usize, members: &[XiMember]) -> ExcursionClass {
    let base = members[0].n;
    let mut power_of_two = true;
    let exponents: Vec<u32> = members
        .iter()
        .map(|m| {
            let ratio = m.n / base;
            if m.n % base != 0 || !ratio.is_power_of_two() {
                power_of_two = false;
            }
            ratio.trailing_zeros()
        })
        .collect();
    let top_exponents: Vec<u32> = members.iter().map(|m| lambda_exponent(m.lambda())).collect();
    let tops: Vec<u128> = members
        .iter()
        .zip(&top_exponents)
        .map(|(m, &p)| (m.n as u128) << p)
        .collect();
    let interleaving = (0..members.len().saturating_sub(1)).all(|i| {
        (members[i + 1].n as u128) <= tops[i] && tops[i] <= tops[i + 1]
    });
    let merged: BTreeSet<u64> = members
        .iter()
        .flat_map(|m| lambda_set(m.n, m.lambda()))
        .collect();
    let merged: Vec<u64> = merged.into_iter().collect();
    let last = members.len() - 1;
    let full: Vec<u64> = lambda_set_exponent(base, exponents[last] + top_exponents[last]);
    let union = IntervalSet::from_intervals(members.iter().map(|m| (m.lo, m.hi)));
    ExcursionClass {
        id,
        members: members.iter().map(|m| m.n).collect(),
        base,
        exponents,
        top_exponents,
        merged_is_full_range: power_of_two && merged == full,
        merged,
        pi_length: union.measure(),
        pi_length_err: members.iter().map(|m| 2.0 * m.slack).sum(),
        power_of_two,
        interleaving,
    }
}

fn lambda_set_exponent(n: u64, p_max: u32) -> Vec<u64> {
    (0..=p_max)
        .map_while(|p| n.checked_mul(1u64.checked_shl(p)?))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Hypothesis {
    Met,
    NotMet,
    Inconclusive,
}

/// Everything computed while checking the cusp-counting implication.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CuspReport {
    pub alpha: String,
    pub beta: String,
    pub eps: String,
    pub big_t: f64,
    pub gamma: f64,
    pub escape: AreaBound,
    /// `|{n < e^{2T} : n⟨nα⟩⟨nβ⟩ ≤ ε³}|`
    pub count: u64,
    pub count_boundary: Vec<u64>,
    /// `γT/(3 log 2)`
    pub bound: f64,
    pub excursions: usize,
    pub xi: Vec<u64>,
    pub duplicates: Vec<(u64, u64)>,
    pub union_all: f64,
    pub union_xi: f64,
    pub classes: Vec<ExcursionClass>,
    pub hypothesis: Hypothesis,
    pub checks: Vec<Check>,
    pub status: Status,
}

/// Projections of the excursions with their endpoint uncertainty.
pub fn projections(excursions: &[Excursion], big_t: f64) -> Result<Vec<XiMember>> {
    excursions
        .iter()
        .map(|e| {
            let (lo, hi) = project(e, big_t)?;
            Ok(XiMember { n: e.n, lo, hi, slack: 2.0 * e.triangle.slack })
        })
        .collect()
}

/// Checks, at finite `T`, the chain from escape of mass to the count of
/// `n < e^{2T}` with `n⟨nα⟩⟨nβ⟩ ≤ ε³`.
pub fn verify_cusp_proposition(
    alpha: &RealSpec,
    beta: &RealSpec,
    eps: &BigRational,
    big_t: f64,
    gamma: f64,
    depth: u32,
) -> Result<CuspReport> {
    check_inputs(alpha, beta, eps, big_t)?;
    if eps * BigRational::from_integer(BigInt::from(2)) >= BigRational::one() {
        return precondition("ε must lie in (0, 1/2)");
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return precondition("γ must lie in (0, 1)");
    }
    let horizon = counting::horizon(big_t)?;
    let cube = eps * eps * eps;
    let mut checks = Vec::new();

    // one scan serves both the count and the excursion candidates
    let scan = counting::count_threshold(
        alpha,
        beta,
        &cube,
        horizon.max(1),
        Mode::Closed,
        &CountOptions { threads: None, store_hits: true },
    )?;
    let count = if horizon == 0 { 0 } else { scan.count_closed };
    let excursions = from_candidates(alpha, beta, eps, big_t, &scan, excursion_horizon(eps, big_t)?)?;
    let escape = empirical::union_area(
        &excursions.iter().map(|e| e.triangle).collect::<Vec<_>>(),
        big_t,
        depth,
    );

    let mult_max = excursions
        .iter()
        .map(|e| uniqueness_check(e.n, alpha, beta, eps, big_t).map(|m| m.count))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .max()
        .unwrap_or(0);
    checks.push(Check::new(
        "single_companion",
        Status::from_bool(mult_max <= 1),
        format!("max multiplicity {mult_max} over {} excursions", excursions.len()),
    ));

    let proj = projections(&excursions, big_t)?;
    let max_i = maximal_intervals(&proj.iter().map(|m| (m.lo, m.hi)).collect::<Vec<_>>());
    let xi: Vec<XiMember> = max_i.kept.iter().map(|&i| proj[i]).collect();
    let union_all = max_i.union_all.measure();
    let union_xi = max_i.union_kept.measure();
    checks.push(Check::new(
        "maximal_union_equality",
        Status::from_bool((union_all - union_xi).abs() <= 1e-10),
        format!("all {union_all:.12} vs maximal {union_xi:.12}"),
    ));

    // area ≤ T·|π-union|, so |π-union| ≥ lower·T
    let slack_total: f64 = proj.iter().map(|m| 2.0 * m.slack).sum();
    let need = escape.lower * big_t;
    checks.push(Check::new(
        "projection_covers_area",
        if union_all + slack_total >= need { Status::Pass } else { Status::Fail },
        format!("union {union_all:.9} vs lower·T {need:.9}"),
    ));

    let classes = equivalence_classes(&xi);
    let structure = classes.iter().all(|c| c.power_of_two && c.interleaving && c.merged_is_full_range);
    let bad = classes.iter().find(|c| !(c.power_of_two && c.interleaving && c.merged_is_full_range));
    checks.push(Check::new(
        "class_structure",
        Status::from_bool(structure),
        match bad {
            Some(c) => format!("class {} members {:?}", c.id, c.members),
            None => format!("{} classes", classes.len()),
        },
    ));
    let class_status = classes.iter().fold(Status::NotApplicable, |s, c| s.and(c.counting_bound()));
    let worst = classes
        .iter()
        .find(|c| c.counting_bound() != Status::Pass)
        .map(|c| format!("class {} |Λ| = {} vs length {:.9}", c.id, c.merged.len(), c.pi_length))
        .unwrap_or_else(|| "every class".into());
    checks.push(Check::new("class_counting_bound", class_status, worst));

    // every doubled n is itself a near-solution below the horizon
    let hits: BTreeSet<u64> = scan.hits.iter().flatten().map(|h| h.n).collect();
    let mut transport = Status::Pass;
    let mut witness = String::new();
    let union_lambda: BTreeSet<u64> = classes.iter().flat_map(|c| c.merged.iter().copied()).collect();
    for &m in &union_lambda {
        let st = if m > horizon {
            Status::Fail
        } else if hits.contains(&m) && !scan.hits_truncated {
            Status::Pass
        } else {
            match littlewood_cmp(m, alpha, beta, &cube).0 {
                Decision::Less | Decision::Equal => Status::Pass,
                Decision::Greater => Status::Fail,
                Decision::Undecided => Status::Inconclusive,
            }
        };
        if st != Status::Pass && witness.is_empty() {
            witness = format!("n = {m}");
        }
        transport = transport.and(st);
    }
    if union_lambda.is_empty() {
        transport = Status::NotApplicable;
    }
    checks.push(Check::new(
        "doubling_transport",
        transport,
        if witness.is_empty() { format!("{} doubled values", union_lambda.len()) } else { witness },
    ));
    checks.push(Check::new(
        "doubling_inclusion",
        Status::from_bool(union_lambda.len() as u64 <= count),
        format!("|⋃Λ| = {} ≤ count {count}", union_lambda.len()),
    ));

    let hypothesis = if escape.lower >= gamma {
        Hypothesis::Met
    } else if escape.upper < gamma {
        Hypothesis::NotMet
    } else {
        Hypothesis::Inconclusive
    };
    let bound = gamma * big_t / DOUBLING_COST;
    let implication = match hypothesis {
        Hypothesis::Met => Status::from_bool(count as f64 >= bound),
        Hypothesis::NotMet => Status::NotApplicable,
        Hypothesis::Inconclusive => Status::Inconclusive,
    };
    checks.push(Check::new(
        "escape_implies_count",
        implication,
        format!(
            "escape [{:.6}, {:.6}] vs γ = {gamma}; count {count} vs γT/(3 log 2) = {bound:.6}",
            escape.lower, escape.upper
        ),
    ));
    if hypothesis == Hypothesis::Met {
        checks.push(Check::new(
            "maximal_union_vs_gamma",
            Status::from_bool(union_xi + slack_total >= gamma * big_t),
            format!("{union_xi:.9} vs γT = {:.9}", gamma * big_t),
        ));
    }
    let status = summarize(&checks);
    Ok(CuspReport {
        alpha: alpha.to_string(),
        beta: beta.to_string(),
        eps: format_rational(eps),
        big_t,
        gamma,
        escape,
        count,
        count_boundary: scan.boundary_cases.clone(),
        bound,
        excursions: excursions.len(),
        xi: xi.iter().map(|m| m.n).collect(),
        duplicates: max_i
            .duplicates
            .iter()
            .map(|&(a, b)| (proj[a].n, proj[b].n))
            .collect(),
        union_all,
        union_xi,
        classes,
        hypothesis,
        checks,
        status,
    })
}

/// Outcome of comparing triangle membership with the systole at sample
/// flow times.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverReport {
    pub samples: usize,
    pub agreements: usize,
    /// Samples within the margin of some triangle edge line.
    pub near_edges: usize,
    /// Samples whose systole could not be separated from `ε`.
    pub systole_boundary: usize,
    /// `(s, t, in_triangles, in_x_eps)` for every disagreement.
    pub disagreements: Vec<(f64, f64, bool, bool)>,
    pub excursions: usize,
}

/// Checks `a_{s,t}τ_{α,β}ℤ³ ∈ X_ε ⇔ (s,t) ∈ ⋃ d_{ε,n}` at the given points of
/// `[0, T]²`, skipping points within `margin` of a triangle edge line.
pub fn cover_check(
    alpha: &RealSpec,
    beta: &RealSpec,
    eps: &BigRational,
    big_t: f64,
    points: &[(f64, f64)],
    margin: f64,
) -> Result<CoverReport> {
    use rayon::prelude::*;
    check_inputs(alpha, beta, eps, big_t)?;
    let list = all_excursions(alpha, beta, eps, big_t)?;
    let base = crate::lattice::tau_lattice(alpha, beta);
    let verdicts = points
        .par_iter()
        .map(|&(s, t)| {
            let near = list
                .iter()
                .any(|e| e.triangle.boundary_distance(s, t) <= margin + e.triangle.slack);
            if near {
                return Ok(None);
            }
            let tri = list.iter().any(|e| e.triangle.contains(s, t));
            let x = crate::lattice::apply_flow(&base, crate::lattice::FlowParams { s, t })?;
            let m = crate::lattice::in_x_eps(&x, eps)?;
            Ok(Some((s, t, tri, m)))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = CoverReport {
        samples: points.len(),
        agreements: 0,
        near_edges: 0,
        systole_boundary: 0,
        disagreements: Vec::new(),
        excursions: list.len(),
    };
    for v in verdicts {
        match v {
            None => out.near_edges += 1,
            Some((_, _, _, m)) if m.boundary => out.systole_boundary += 1,
            Some((s, t, tri, m)) if tri != m.inside => out.disagreements.push((s, t, tri, m.inside)),
            Some(_) => out.agreements += 1,
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UniquenessSweep {
    pub n_max: u64,
    pub max_multiplicity: u32,
    /// `n` with two or more qualifying companions.
    pub violations: Vec<u64>,
    pub boundary: Vec<u64>,
    /// `n` with exactly one qualifying companion.
    pub qualifying: u64,
}

/// Runs [`uniqueness_check`] for every `1 ≤ n ≤ n_max`.
pub fn uniqueness_sweep(
    alpha: &RealSpec,
    beta: &RealSpec,
    eps: &BigRational,
    big_t: f64,
    n_max: u64,
) -> Result<UniquenessSweep> {
    use rayon::prelude::*;
    check_inputs(alpha, beta, eps, big_t)?;
    let all = (1..=n_max)
        .into_par_iter()
        .map(|n| uniqueness_check(n, alpha, beta, eps, big_t))
        .collect::<Result<Vec<_>>>()?;
    Ok(UniquenessSweep {
        n_max,
        max_multiplicity: all.iter().map(|m| m.count).max().unwrap_or(0),
        violations: all.iter().filter(|m| m.count > 1).map(|m| m.n).collect(),
        boundary: all.iter().filter(|m| m.boundary).map(|m| m.n).collect(),
        qualifying: all.iter().filter(|m| m.count == 1).count() as u64,
    })
}
