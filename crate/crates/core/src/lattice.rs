//! Unimodular lattices in ℝ³ under the diagonal flow
//! `a_{s,t} = diag(e^{-s-t}, e^s, e^t)`.
//!
//! Bases are kept in double-double precision. Shortest vectors are measured in
//! the sup-norm: LLL reduction followed by Fincke–Pohst enumeration inside the
//! Euclidean ball that contains the sup-norm ball of the best reduced vector.
//! For lattices of the form `a_{s,t}τ_{α,β}ℤ³` the winning candidates are
//! re-measured from multiprecision values of `nα + m₁`, `nβ + m₂`.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{precondition, range, Result};
use crate::realnum::{working_precision, Dd, FloatInterval, RealSpec};

/// Largest accumulated `|s| + |t|` a state may carry. Beyond it the
/// double-double basis no longer resolves `nα + m` for the relevant `n`.
pub const FLOW_BUDGET: f64 = 50.0;
/// Grid size refused by `orbit_trace`.
pub const MAX_GRID_POINTS: u64 = 100_000_000;
/// Relative gap under which two candidate norms count as tied.
const TIE_REL: f64 = 1e-20;
/// Relative slack on the enumeration radius.
const RADIUS_SLACK: f64 = 1e-9;
/// Relative width given to norms measured only in double-double.
const DD_NORM_SLACK: f64 = 1e-24;
const LLL_DELTA: f64 = 0.99;

pub type Vec3 = [Dd; 3];
/// Integer coefficients of a lattice vector in the state's basis.
pub type Coeffs = [i128; 3];

/// Flow times of `a_{s,t}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FlowParams {
    pub s: f64,
    pub t: f64,
}

impl FlowParams {
    pub fn new(s: f64, t: f64) -> Result<FlowParams> {
        if !(s.is_finite() && t.is_finite()) || s < 0.0 || t < 0.0 {
            return precondition(format!("flow times must be finite and non-negative, got ({s}, {t})"));
        }
        Ok(FlowParams { s, t })
    }

    /// The diagonal of `a_{s,t}`.
    pub fn diagonal(&self) -> Vec3 {
        let s = Dd::from_f64(self.s);
        let t = Dd::from_f64(self.t);
        [(-(s + t)).exp(), s.exp(), t.exp()]
    }
}

/// `a_{s,t}τ_{α,β}ℤ³` bookkeeping: the inputs and the accumulated flow time.
#[derive(Clone, Debug)]
pub struct Provenance {
    pub alpha: RealSpec,
    pub beta: RealSpec,
    pub s: Dd,
    pub t: Dd,
    /// `α, β` rounded to double-double, computed once.
    approx: (Dd, Dd),
}

/// Shortest nonzero vector in the sup-norm.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Systole {
    /// Coefficients in the state's basis; the first nonzero entry is positive.
    /// Among tied minima the one with the smallest coefficients is chosen.
    pub coeffs: Coeffs,
    /// Certified enclosure of the minimal sup-norm.
    pub norm: FloatInterval,
    /// Other minimal vectors that could not be separated from `coeffs`.
    pub ties: Vec<Coeffs>,
}

#[derive(Debug)]
pub struct LatticeState {
    /// Columns are the generators.
    basis: [Vec3; 3],
    provenance: Option<Provenance>,
    systole: OnceLock<Systole>,
}

impl Clone for LatticeState {
    fn clone(&self) -> Self {
        LatticeState {
            basis: self.basis,
            provenance: self.provenance.clone(),
            systole: self.systole.clone(),
        }
    }
}

/// `τ_{α,β}ℤ³`: generators `(1, α, β)`, `(0, 1, 0)`, `(0, 0, 1)`.
pub fn tau_lattice(alpha: &RealSpec, beta: &RealSpec) -> LatticeState {
    LatticeState::from_provenance(Provenance {
        alpha: alpha.clone(),
        beta: beta.clone(),
        s: Dd::ZERO,
        t: Dd::ZERO,
        approx: (alpha.to_dd(), beta.to_dd()),
    })
}

/// `a_{s,t}·x`. The provenance time is accumulated; the systole cache is not
/// carried over.
pub fn apply_flow(x: &LatticeState, p: FlowParams) -> Result<LatticeState> {
    let (s0, t0) = x.flow_time();
    let total = (s0 + Dd::from_f64(p.s)).abs().to_f64() + (t0 + Dd::from_f64(p.t)).abs().to_f64();
    if total > FLOW_BUDGET {
        return range(format!(
            "accumulated flow time |s|+|t| = {total:.3} exceeds the budget {FLOW_BUDGET}"
        ));
    }
    if let Some(pr) = &x.provenance {
        return Ok(LatticeState::from_provenance(Provenance {
            alpha: pr.alpha.clone(),
            beta: pr.beta.clone(),
            s: pr.s + Dd::from_f64(p.s),
            t: pr.t + Dd::from_f64(p.t),
            approx: pr.approx,
        }));
    }
    let d = p.diagonal();
    let mut basis = x.basis;
    for col in basis.iter_mut() {
        for i in 0..3 {
            col[i] = col[i] * d[i];
        }
    }
    Ok(LatticeState {
        basis,
        provenance: None,
        systole: OnceLock::new(),
    })
}

impl LatticeState {
    fn from_provenance(p: Provenance) -> LatticeState {
        let es = p.s.exp();
        let et = p.t.exp();
        let e0 = (-(p.s + p.t)).exp();
        let (a, b) = p.approx;
        let basis = [
            [e0, es * a, et * b],
            [Dd::ZERO, es, Dd::ZERO],
            [Dd::ZERO, Dd::ZERO, et],
        ];
        LatticeState {
            basis,
            provenance: Some(p),
            systole: OnceLock::new(),
        }
    }

    /// A lattice from explicit generators (columns); must be unimodular to
    /// within `1e-12`.
    pub fn from_basis(columns: [Vec3; 3]) -> Result<LatticeState> {
        let x = LatticeState {
            basis: columns,
            provenance: None,
            systole: OnceLock::new(),
        };
        let det = x.det().to_f64();
        if !det.is_finite() || (det - 1.0).abs() > 1e-12 {
            return precondition(format!("basis is not unimodular (det = {det})"));
        }
        Ok(x)
    }

    pub fn from_f64_columns(columns: [[f64; 3]; 3]) -> Result<LatticeState> {
        Self::from_basis(columns.map(|c| c.map(Dd::from_f64)))
    }

    /// `ℤ³` with the standard basis.
    pub fn identity() -> LatticeState {
        tau_lattice(&RealSpec::integer(0), &RealSpec::integer(0))
    }

    pub fn basis(&self) -> &[Vec3; 3] {
        &self.basis
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    /// Accumulated flow time, zero for states without provenance.
    pub fn flow_time(&self) -> (Dd, Dd) {
        match &self.provenance {
            Some(p) => (p.s, p.t),
            None => (Dd::ZERO, Dd::ZERO),
        }
    }

    pub fn det(&self) -> Dd {
        let [a, b, c] = self.basis;
        a[0] * (b[1] * c[2] - b[2] * c[1]) - b[0] * (a[1] * c[2] - a[2] * c[1])
            + c[0] * (a[1] * b[2] - a[2] * b[1])
    }

    /// The lattice vector with the given coefficients.
    pub fn vector(&self, c: &Coeffs) -> Vec3 {
        combine(&self.basis, c)
    }

    /// Sup-norm of a lattice vector, in double-double.
    pub fn sup_norm(&self, c: &Coeffs) -> Dd {
        match &self.provenance {
            // keep the cancellation in nα + m₁ away from the flowed entries
            Some(p) => {
                let n = Dd::from_i128(c[0]);
                let r1 = (n * p.approx.0 + Dd::from_i128(c[1])).abs();
                let r2 = (n * p.approx.1 + Dd::from_i128(c[2])).abs();
                let x = [
                    n.abs() * self.basis[0][0],
                    r1 * self.basis[1][1],
                    r2 * self.basis[2][2],
                ];
                dd_max(&x)
            }
            None => sup(&self.vector(c)),
        }
    }

    /// Certified enclosure of the sup-norm of a lattice vector.
    pub fn certified_norm(&self, c: &Coeffs) -> FloatInterval {
        match &self.provenance {
            Some(p) => {
                let bits = working_precision();
                let n = BigInt::from(c[0]);
                let r1 = p.alpha.eval(bits + 130).scale(&n).add_integer(&BigInt::from(c[1])).abs();
                let r2 = p.beta.eval(bits + 130).scale(&n).add_integer(&BigInt::from(c[2])).abs();
                let n_abs = c[0].unsigned_abs() as f64;
                let coords = [
                    mul_bounds((n_abs, n_abs), exp_bounds(-(p.s + p.t))),
                    mul_bounds(bounds(&r1.to_f64_bounds()), exp_bounds(p.s)),
                    mul_bounds(bounds(&r2.to_f64_bounds()), exp_bounds(p.t)),
                ];
                let lo = coords.iter().map(|c| c.0).fold(0.0, f64::max);
                let hi = coords.iter().map(|c| c.1).fold(0.0, f64::max);
                FloatInterval::new(lo, hi)
            }
            None => {
                let v = self.sup_norm(c).to_f64();
                FloatInterval::new(
                    (v * (1.0 - DD_NORM_SLACK)).next_down().max(0.0),
                    (v * (1.0 + DD_NORM_SLACK)).next_up(),
                )
            }
        }
    }

    /// Shortest nonzero vector in the sup-norm (cached).
    pub fn systole(&self) -> &Systole {
        self.systole.get_or_init(|| compute_systole(self))
    }

    /// All nonzero lattice vectors (up to sign) with `|v_i| ≤ bounds[i]`.
    pub fn vectors_in_box(&self, bounds: [f64; 3]) -> Vec<Coeffs> {
        assert!(bounds.iter().all(|b| b.is_finite() && *b > 0.0));
        let scaled = self
            .basis
            .map(|col| [0, 1, 2].map(|i| col[i] / Dd::from_f64(bounds[i])));
        let (reduced, u) = lll(scaled);
        let radius2 = Dd::from_f64(3.0 * (1.0 + RADIUS_SLACK));
        let mut out: Vec<Coeffs> = enumerate_ball(&reduced, radius2)
            .into_iter()
            .filter(|x| {
                let v = combine(&reduced, x);
                v.iter().all(|c| c.abs().to_f64() <= 1.0)
            })
            .map(|x| canonical(transform(&u, &x)))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Membership in `X_ε`: the lattice meets the closed sup-norm ball of radius
/// `ε` outside the origin.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Membership {
    pub inside: bool,
    /// The certified systole interval straddles `ε`; `inside` is then a best
    /// guess from the midpoint.
    pub boundary: bool,
}

pub fn in_x_eps(x: &LatticeState, eps: &BigRational) -> Result<Membership> {
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    if *eps <= BigRational::zero() || *eps >= half {
        return precondition("ε must lie in (0, 1/2)");
    }
    let e = crate::realnum::Interval::point(eps.clone()).to_f64_bounds();
    let norm = x.systole().norm;
    Ok(if norm.hi <= e.lo {
        Membership { inside: true, boundary: false }
    } else if norm.lo > e.hi {
        Membership { inside: false, boundary: false }
    } else {
        Membership {
            inside: norm.mid() <= e.mid(),
            boundary: true,
        }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TracePoint {
    pub s: f64,
    pub t: f64,
    pub systole: Systole,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrbitTrace {
    /// Row-major: `s` is the slow index.
    pub points: Vec<TracePoint>,
    /// Index of the point with the smallest systole (first one on ties).
    pub min_index: usize,
}

impl OrbitTrace {
    pub fn min(&self) -> &TracePoint {
        &self.points[self.min_index]
    }
}

/// Number of grid values `0, h, 2h, …` not exceeding `T`.
pub fn grid_len(big_t: f64, h: f64) -> u64 {
    ((big_t / h) * (1.0 + 1e-12)).floor().max(0.0) as u64 + 1
}

/// Systoles of `a_{s,t}τ_{α,β}ℤ³` over the grid `{0, h, …}² ∩ [0, T]²`.
pub fn orbit_trace(alpha: &RealSpec, beta: &RealSpec, big_t: f64, h: f64) -> Result<OrbitTrace> {
    if !(h > 0.0 && h.is_finite()) || !(big_t >= 0.0 && big_t.is_finite()) {
        return precondition("orbit trace needs h > 0 and T ≥ 0");
    }
    let k = grid_len(big_t, h);
    if k.saturating_mul(k) > MAX_GRID_POINTS {
        return range(format!("grid of {k}×{k} points exceeds {MAX_GRID_POINTS}"));
    }
    let base = tau_lattice(alpha, beta);
    let rows: Vec<Vec<TracePoint>> = (0..k)
        .into_par_iter()
        .map(|i| {
            (0..k)
                .map(|j| {
                    let (s, t) = (i as f64 * h, j as f64 * h);
                    let x = apply_flow(&base, FlowParams { s, t })?;
                    Ok(TracePoint {
                        s,
                        t,
                        systole: x.systole().clone(),
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<TracePoint> = rows.into_iter().flatten().collect();
    let mut min_index = 0;
    for (i, p) in points.iter().enumerate() {
        if p.systole.norm.mid() < points[min_index].systole.norm.mid() {
            min_index = i;
        }
    }
    Ok(OrbitTrace { points, min_index })
}

/// A 3×3 matrix acting on column vectors, stored row-major.
pub type Matrix = [[Dd; 3]; 3];

/// `τ_{u₁,u₂}` as a matrix: identity with `u₁, u₂` below the first diagonal entry.
pub fn unipotent(u1: Dd, u2: Dd) -> Matrix {
    [
        [Dd::ONE, Dd::ZERO, Dd::ZERO],
        [u1, Dd::ONE, Dd::ZERO],
        [u2, Dd::ZERO, Dd::ONE],
    ]
}

pub fn mat_mul(a: &Matrix, b: &Matrix) -> Matrix {
    let mut c = [[Dd::ZERO; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    c
}

/// `a_{s,t}·u·a_{s,t}⁻¹` by explicit matrix products.
pub fn conjugate(p: FlowParams, u: &Matrix) -> Matrix {
    let d = p.diagonal();
    let diag = |v: [Dd; 3]| {
        [
            [v[0], Dd::ZERO, Dd::ZERO],
            [Dd::ZERO, v[1], Dd::ZERO],
            [Dd::ZERO, Dd::ZERO, v[2]],
        ]
    };
    let inv = d.map(|x| Dd::ONE / x);
    mat_mul(&mat_mul(&diag(d), u), &diag(inv))
}

/// Expansion factors of the unipotent coordinates under conjugation by
/// `a_{s,t}`: `(e^{2s+t}, e^{s+2t})`.
pub fn expansion_rates(p: FlowParams) -> (Dd, Dd) {
    let s = Dd::from_f64(p.s);
    let t = Dd::from_f64(p.t);
    ((s + s + t).exp(), (s + t + t).exp())
}

// ---------------------------------------------------------------------------

fn combine(basis: &[Vec3; 3], c: &Coeffs) -> Vec3 {
    let k = c.map(Dd::from_i128);
    [0, 1, 2].map(|i| basis[0][i] * k[0] + basis[1][i] * k[1] + basis[2][i] * k[2])
}

fn transform(u: &[Coeffs; 3], x: &Coeffs) -> Coeffs {
    [0, 1, 2].map(|i| u[0][i] * x[0] + u[1][i] * x[1] + u[2][i] * x[2])
}

fn dot(a: &Vec3, b: &Vec3) -> Dd {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn sup(v: &Vec3) -> Dd {
    dd_max(&v.map(Dd::abs))
}

fn dd_max(v: &[Dd; 3]) -> Dd {
    let mut m = v[0];
    for &x in &v[1..] {
        if x > m {
            m = x;
        }
    }
    m
}

/// Flips the sign so that the first nonzero coefficient is positive.
pub fn canonical(c: Coeffs) -> Coeffs {
    match c.iter().find(|&&x| x != 0) {
        Some(&x) if x < 0 => c.map(|v| -v),
        _ => c,
    }
}

fn exp_bounds(x: Dd) -> (f64, f64) {
    let e = x.exp().to_f64();
    (e.next_down().next_down(), e.next_up().next_up())
}

fn bounds(iv: &FloatInterval) -> (f64, f64) {
    (iv.lo, iv.hi)
}

fn mul_bounds(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    // both factors are non-negative
    ((a.0.max(0.0) * b.0).next_down().max(0.0), (a.1 * b.1).next_up())
}

/// Gram–Schmidt data: `μ[i][j]` for `j < i` and squared lengths `B[i]`.
fn gram_schmidt(b: &[Vec3; 3]) -> ([[Dd; 3]; 3], [Dd; 3]) {
    let mut star = *b;
    let mut mu = [[Dd::ZERO; 3]; 3];
    let mut norms = [Dd::ZERO; 3];
    for i in 0..3 {
        for j in 0..i {
            mu[i][j] = dot(&b[i], &star[j]) / norms[j];
            for k in 0..3 {
                star[i][k] = star[i][k] - mu[i][j] * star[j][k];
            }
        }
        norms[i] = dot(&star[i], &star[i]);
    }
    (mu, norms)
}

/// LLL reduction of three columns. Returns the reduced basis and the
/// unimodular transform `u` with `reduced[j] = Σ_i u[j][i]·basis[i]`.
fn lll(basis: [Vec3; 3]) -> ([Vec3; 3], [Coeffs; 3]) {
    let mut b = basis;
    let mut u: [Coeffs; 3] = [[1, 0, 0], [0, 1, 0], [0, 0, 1]];
    let delta = Dd::from_f64(LLL_DELTA);
    let mut k = 1;
    let mut guard = 0u32;
    while k < 3 {
        guard += 1;
        if guard > 100_000 {
            break;
        }
        for j in (0..k).rev() {
            let (mu, _) = gram_schmidt(&b);
            let Some(r) = mu[k][j].round_to_i128() else { continue };
            if r != 0 {
                let rd = Dd::from_i128(r);
                for i in 0..3 {
                    b[k][i] = b[k][i] - rd * b[j][i];
                    u[k][i] -= r * u[j][i];
                }
            }
        }
        let (mu, norms) = gram_schmidt(&b);
        let lhs = norms[k];
        let rhs = (delta - mu[k][k - 1] * mu[k][k - 1]) * norms[k - 1];
        if lhs >= rhs {
            k += 1;
        } else {
            b.swap(k, k - 1);
            u.swap(k, k - 1);
            k = (k - 1).max(1);
        }
    }
    (b, u)
}

/// All nonzero `x ∈ ℤ³` (up to sign) with `|Σ x_i b_i|² ≤ radius2`.
fn enumerate_ball(b: &[Vec3; 3], radius2: Dd) -> Vec<Coeffs> {
    let (mu, norms) = gram_schmidt(b);
    let mut out = Vec::new();
    let r2 = radius2.to_f64();
    let bn = norms.map(|x| x.to_f64());
    let m = mu.map(|row| row.map(|x| x.to_f64()));
    // a little room for rounding in the f64 bounds; exact filtering follows
    let slack = 1.0 + 1e-9;
    let range = |center: f64, rem: f64, bi: f64| -> (i128, i128) {
        let w = (rem.max(0.0) / bi).sqrt() * slack + 1e-12;
        ((center - w).ceil() as i128, (center + w).floor() as i128)
    };
    let (lo2, hi2) = range(0.0, r2, bn[2]);
    for x2 in lo2..=hi2 {
        let y2 = x2 as f64;
        let rem2 = r2 - y2 * y2 * bn[2];
        let c1 = -m[2][1] * y2;
        let (lo1, hi1) = range(c1, rem2, bn[1]);
        for x1 in lo1..=hi1 {
            let y1 = x1 as f64 - c1;
            let rem1 = rem2 - y1 * y1 * bn[1];
            let c0 = -m[1][0] * x1 as f64 - m[2][0] * y2;
            let (lo0, hi0) = range(c0, rem1, bn[0]);
            for x0 in lo0..=hi0 {
                let x = [x0, x1, x2];
                if x == [0, 0, 0] || canonical(x) != x {
                    continue;
                }
                let v = combine(b, &x);
                if dot(&v, &v) <= radius2 * Dd::from_f64(slack) {
                    out.push(x);
                }
            }
        }
    }
    out
}

fn compute_systole(x: &LatticeState) -> Systole {
    let (reduced, u) = lll(x.basis);
    // the sup-norm ball of radius R sits inside the Euclidean ball of radius √3·R
    let best = (0..3).map(|i| sup(&reduced[i])).fold(Dd::from_f64(f64::INFINITY), |a, b| {
        if b < a {
            b
        } else {
            a
        }
    });
    let radius2 = Dd::from_f64(3.0 * (1.0 + RADIUS_SLACK)) * best * best;
    let mut cands: Vec<(Coeffs, Dd)> = enumerate_ball(&reduced, radius2)
        .into_iter()
        .map(|y| {
            let c = canonical(transform(&u, &y));
            (c, x.sup_norm(&c))
        })
        .collect();
    if cands.is_empty() {
        // only possible through catastrophic rounding; fall back to the basis
        cands = (0..3)
            .map(|i| {
                let c = canonical(u[i]);
                (c, x.sup_norm(&c))
            })
            .collect();
    }
    let min = cands.iter().map(|c| c.1.to_f64()).fold(f64::INFINITY, f64::min);
    // certify every candidate that could still be minimal
    let mut close: Vec<(Coeffs, FloatInterval)> = cands
        .iter()
        .filter(|c| c.1.to_f64() <= min * (1.0 + 1e-12))
        .map(|c| (c.0, x.certified_norm(&c.0)))
        .collect();
    close.sort_by(|a, b| a.0.cmp(&b.0));
    close.dedup_by(|a, b| a.0 == b.0);
    let best_hi = close.iter().map(|c| c.1.hi).fold(f64::INFINITY, f64::min);
    let mut tied: Vec<(Coeffs, FloatInterval)> = close
        .into_iter()
        .filter(|c| c.1.lo <= best_hi * (1.0 + TIE_REL))
        .collect();
    // primary: smallest coefficients, then lexicographically largest
    let weight = |c: &Coeffs| c.iter().map(|x| x * x).sum::<i128>();
    tied.sort_by(|a, b| weight(&a.0).cmp(&weight(&b.0)).then(b.0.cmp(&a.0)));
    let lo = tied.iter().map(|c| c.1.lo).fold(f64::INFINITY, f64::min);
    let hi = tied.iter().map(|c| c.1.hi).fold(0.0, f64::max);
    Systole {
        coeffs: tied[0].0,
        norm: FloatInterval::new(lo, hi),
        ties: tied[1..].iter().map(|c| c.0).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(x: f64) -> f64 {
        x.exp()
    }

    #[test]
    fn identity_systole_is_one() {
        let z = LatticeState::identity();
        let sys = z.systole();
        assert_eq!(sys.coeffs, [1, 0, 0]);
        assert!(sys.norm.contains(1.0));
        // every nonzero vector of {-1,0,1}³ up to sign
        assert_eq!(sys.ties.len(), 12);
    }

    #[test]
    fn diagonal_systole_closed_form() {
        let z = LatticeState::identity();
        let x = apply_flow(&z, FlowParams::new(1.0, 1.0).unwrap()).unwrap();
        let sys = x.systole();
        assert_eq!(sys.coeffs, [1, 0, 0]);
        assert!(sys.norm.contains(e(-2.0)) || (sys.norm.mid() - e(-2.0)).abs() < 1e-15);
        assert!(sys.ties.is_empty());
    }

    #[test]
    fn flow_budget_is_enforced() {
        let z = LatticeState::identity();
        assert!(apply_flow(&z, FlowParams::new(30.0, 21.0).unwrap()).is_err());
        assert!(apply_flow(&z, FlowParams::new(30.0, 20.0).unwrap()).is_ok());
    }

    #[test]
    fn rejects_non_unimodular() {
        let m = [[2.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(LatticeState::from_f64_columns(m).is_err());
    }

    #[test]
    fn membership_near_diagonal_systole() {
        let z = LatticeState::identity();
        let x = apply_flow(&z, FlowParams::new(1.0, 1.0).unwrap()).unwrap();
        let r = |p: i64, q: i64| BigRational::new(p.into(), q.into());
        assert!(in_x_eps(&x, &r(1, 5)).unwrap().inside);
        assert!(!in_x_eps(&x, &r(1, 10)).unwrap().inside);
        assert!(!in_x_eps(&z, &r(2, 5)).unwrap().inside);
        assert!(in_x_eps(&z, &r(1, 2)).is_err());
    }

    #[test]
    fn box_vectors_of_identity() {
        let z = LatticeState::identity();
        let v = z.vectors_in_box([2.5, 0.5, 0.5]);
        assert_eq!(v, vec![[1, 0, 0], [2, 0, 0]]);
    }

    #[test]
    fn tau_systole_matches_brute_force() {
        let a = RealSpec::sqrt(2).unwrap();
        let b = RealSpec::sqrt(3).unwrap();
        let x = apply_flow(&tau_lattice(&a, &b), FlowParams::new(2.0, 2.0).unwrap()).unwrap();
        let (af, bf) = (2f64.sqrt(), 3f64.sqrt());
        let mut best = f64::INFINITY;
        for n in 0..=60i64 {
            for m1 in -90..=0i64 {
                for m2 in -110..=0i64 {
                    if n == 0 && m1 == 0 && m2 == 0 {
                        continue;
                    }
                    let nf = n as f64;
                    let v = (nf * e(-4.0))
                        .max((nf * af + m1 as f64).abs() * e(2.0))
                        .max((nf * bf + m2 as f64).abs() * e(2.0));
                    best = best.min(v);
                }
            }
        }
        let sys = x.systole();
        assert!((sys.norm.mid() - best).abs() < 1e-12, "{:?} vs {best}", sys);
    }

    #[test]
    fn conjugation_by_a1() {
        let u = unipotent(Dd::from_f64(0.3), Dd::from_f64(-0.7));
        let c = conjugate(FlowParams::new(1.0, 0.0).unwrap(), &u);
        assert!((c[1][0].to_f64() - e(2.0) * 0.3).abs() < 1e-12);
        assert!((c[2][0].to_f64() + e(1.0) * 0.7).abs() < 1e-12);
        assert!((c[0][0].to_f64() - 1.0).abs() < 1e-15);
    }
}
