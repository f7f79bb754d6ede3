//! Finite-time empirical measures along the `A⁺`-orbit.
//!
//! The escape fraction `(1/T²)·|{(s,t) ∈ [0,T]² : a_{s,t}x ∈ X_ε}|` is bounded
//! by a quadtree over the union of excursion regions: cells certified inside
//! one region count toward the lower bound, cells certified outside every
//! region are discarded, and whatever is left at the finest level is the
//! reported gap. Observables of `δ^T` are midpoint-rule averages; `δ^N` is the
//! exact count over the `a₁, a₂` grid.

use num_rational::{BigRational, Ratio};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{precondition, range, Result};
use crate::excursions::{self, Triangle};
use crate::lattice::{apply_flow, in_x_eps, tau_lattice, FlowParams, LatticeState, MAX_GRID_POINTS};
use crate::realnum::RealSpec;

pub const DEFAULT_DEPTH: u32 = 12;
/// Cell counts are tallied in units of `4^{-depth}` and must stay exact in `f64`.
pub const MAX_DEPTH: u32 = 24;
/// Subtrees below this level are classified in parallel.
const SPLIT_LEVEL: u32 = 3;

/// Certified bounds on the fraction of `[0, T]²` covered by a union of regions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AreaBound {
    pub lower: f64,
    pub upper: f64,
    pub depth: u32,
    /// Area (not fraction) of the finest cells left undecided.
    pub unresolved_area: f64,
    pub inside_cells: u64,
    pub unresolved_cells: u64,
}

impl AreaBound {
    fn from_cells(inside: u64, unresolved: u64, depth: u32, big_t: f64) -> AreaBound {
        let total = 4f64.powi(depth as i32);
        AreaBound {
            lower: inside as f64 / total,
            upper: (inside + unresolved) as f64 / total,
            depth,
            unresolved_area: unresolved as f64 / total * big_t * big_t,
            inside_cells: inside,
            unresolved_cells: unresolved,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

struct Quadtree<'a> {
    regions: &'a [Triangle],
    depth: u32,
    unit: f64,
    /// Rounding in cell coordinates.
    coord_err: f64,
}

enum Verdict {
    Inside,
    Outside,
    Unknown,
}

impl Quadtree<'_> {
    fn judge(&self, r: &Triangle, x0: f64, y0: f64, x1: f64, y1: f64) -> Verdict {
        let m = r.slack + self.coord_err;
        if x1 <= r.s_max - m && y1 <= r.t_max - m && x0 + y0 >= r.hyp + 2.0 * m {
            return Verdict::Inside;
        }
        // separating axes of a box and a right triangle
        if x0 > r.s_max + m
            || y0 > r.t_max + m
            || x1 + y1 < r.hyp - 2.0 * m
            || x1 < r.hyp - r.t_max - 2.0 * m
            || y1 < r.hyp - r.s_max - 2.0 * m
            || x0 + y0 > r.s_max + r.t_max + 2.0 * m
        {
            return Verdict::Outside;
        }
        Verdict::Unknown
    }

    /// `(inside, unresolved)` finest cells under the cell with finest-grid
    /// corner `(i, j)` at `level`.
    fn classify(&self, i: u64, j: u64, level: u32, cands: &[u32]) -> (u64, u64) {
        let span = 1u64 << (self.depth - level);
        let weight = span * span;
        let (x0, y0) = (i as f64 * self.unit, j as f64 * self.unit);
        let (x1, y1) = ((i + span) as f64 * self.unit, (j + span) as f64 * self.unit);
        let mut live = Vec::with_capacity(cands.len());
        for &c in cands {
            match self.judge(&self.regions[c as usize], x0, y0, x1, y1) {
                Verdict::Inside => return (weight, 0),
                Verdict::Outside => {}
                Verdict::Unknown => live.push(c),
            }
        }
        if live.is_empty() {
            return (0, 0);
        }
        if level == self.depth {
            return (0, weight);
        }
        let h = span / 2;
        let mut acc = (0, 0);
        for (di, dj) in [(0, 0), (h, 0), (0, h), (h, h)] {
            let r = self.classify(i + di, j + dj, level + 1, &live);
            acc.0 += r.0;
            acc.1 += r.1;
        }
        acc
    }
}

/// Bounds on `(1/T²)·area(⋃ regions ∩ [0,T]²)`.
pub fn union_area(regions: &[Triangle], big_t: f64, depth: u32) -> AreaBound {
    let depth = depth.min(MAX_DEPTH);
    let tree = Quadtree {
        regions,
        depth,
        unit: big_t / (1u64 << depth) as f64,
        coord_err: 4.0 * f64::EPSILON * big_t.max(1.0),
    };
    let all: Vec<u32> = (0..regions.len() as u32).collect();
    let top = SPLIT_LEVEL.min(depth);
    let side = 1u64 << top;
    let span = 1u64 << (depth - top);
    let parts: Vec<(u64, u64)> = (0..side * side)
        .into_par_iter()
        .map(|k| tree.classify((k / side) * span, (k % side) * span, top, &all))
        .collect();
    let (inside, unresolved) = parts.iter().fold((0, 0), |a, p| (a.0 + p.0, a.1 + p.1));
    AreaBound::from_cells(inside, unresolved, depth, big_t)
}

/// Escape fraction of `a_{s,t}τ_{α,β}ℤ³` into `X_ε` over `[0, T]²`, from the
/// excursion triangles.
pub fn escape_fraction(
    alpha: &RealSpec,
    beta: &RealSpec,
    eps: &BigRational,
    big_t: f64,
    depth: u32,
) -> Result<AreaBound> {
    let list = excursions::all_excursions(alpha, beta, eps, big_t)?;
    let tris: Vec<Triangle> = list.iter().map(|e| e.triangle).collect();
    Ok(union_area(&tris, big_t, depth))
}

/// `[ln x − pad, ln x + pad]` as midpoint and pad; `±∞` for `x ∈ {0, ∞}`.
fn ln_with_pad(x: f64, rel: f64) -> (f64, f64) {
    if x == 0.0 {
        return (f64::NEG_INFINITY, 0.0);
    }
    let v = x.ln();
    (v, rel + 4.0 * f64::EPSILON * v.abs().max(1.0))
}

/// Region of flow times at which the vector with coordinates `v` is ε-short.
/// Coordinates are taken with relative uncertainty `rel`.
pub fn region_for_vector(v: [f64; 3], eps: f64, rel: f64) -> Triangle {
    let le = ln_with_pad(eps, rel);
    let l = v.map(|c| ln_with_pad(c.abs(), rel));
    let s_max = le.0 - l[1].0;
    let t_max = le.0 - l[2].0;
    let hyp = l[0].0 - le.0;
    let slack = le.1 + l[0].1.max(l[1].1).max(l[2].1);
    Triangle { s_max, t_max, hyp, slack }
}

/// Escape fraction of `a_{s,t}x` into `X_ε` for an arbitrary lattice, from
/// every lattice vector that can become ε-short on `[0, T]²`.
pub fn escape_fraction_lattice(x: &LatticeState, eps: f64, big_t: f64, depth: u32) -> Result<AreaBound> {
    if !(eps > 0.0 && eps < 0.5) || !(big_t > 0.0) {
        return precondition("need 0 < ε < 1/2 and T > 0");
    }
    let first = eps * (2.0 * big_t).exp();
    if !first.is_finite() {
        return range("e^(2T) overflows");
    }
    let pad = 1.0 + 1e-9;
    let regions: Vec<Triangle> = x
        .vectors_in_box([first * pad, eps * pad, eps * pad])
        .iter()
        .filter(|c| c.iter().any(|&k| k != 0))
        .map(|c| {
            let v = x.vector(c).map(|d| d.to_f64());
            region_for_vector(v, eps, 1e-15)
        })
        .collect();
    Ok(union_area(&regions, big_t, depth))
}

/// Observable on lattices, evaluated as a bin index.
#[derive(Clone, Debug, PartialEq)]
pub enum Observable {
    /// Bins by systole against ascending thresholds. Bin 0 is the cusp
    /// (systole ≤ smallest threshold); the last bin is systole > largest.
    SystoleBins(Vec<f64>),
    /// Bin 1 if the lattice is in `X_ε`, else bin 0.
    IndicatorXEps(BigRational),
    /// The constant 1 (a single bin).
    Constant,
}

impl Observable {
    pub fn bins(&self) -> usize {
        match self {
            Observable::SystoleBins(th) => th.len() + 1,
            Observable::IndicatorXEps(_) => 2,
            Observable::Constant => 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Observable::SystoleBins(th) = self {
            if th.is_empty() || th.windows(2).any(|w| w[0] >= w[1]) || th.iter().any(|t| !(*t > 0.0)) {
                return precondition("systole thresholds must be positive and strictly increasing");
            }
        }
        Ok(())
    }

    /// Bin of `x` and whether the certified systole straddled a threshold.
    pub fn classify(&self, x: &LatticeState) -> Result<(usize, bool)> {
        match self {
            Observable::SystoleBins(th) => {
                let norm = x.systole().norm;
                let bin = th.iter().filter(|&&t| norm.mid() > t).count();
                let boundary = th.iter().any(|&t| norm.contains(t));
                Ok((bin, boundary))
            }
            Observable::IndicatorXEps(eps) => {
                let m = in_x_eps(x, eps)?;
                Ok((m.inside as usize, m.boundary))
            }
            Observable::Constant => Ok((0, false)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridAverage {
    /// Grid cells per side.
    pub cells: u64,
    /// Mass in each bin.
    pub fractions: Vec<f64>,
    pub counts: Vec<u64>,
    pub boundary_points: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObservableAverage {
    pub big_t: f64,
    pub coarse: GridAverage,
    /// Same average with the step halved.
    pub fine: GridAverage,
    /// `max_i |fine_i − coarse_i|`.
    pub delta: f64,
}

fn grid_average(x: &LatticeState, big_t: f64, cells: u64, obs: &Observable) -> Result<GridAverage> {
    let h = big_t / cells as f64;
    let rows: Vec<(Vec<u64>, u64)> = (0..cells)
        .into_par_iter()
        .map(|i| {
            let mut counts = vec![0u64; obs.bins()];
            let mut boundary = 0;
            for j in 0..cells {
                let p = FlowParams { s: (i as f64 + 0.5) * h, t: (j as f64 + 0.5) * h };
                let (b, edge) = obs.classify(&apply_flow(x, p)?)?;
                counts[b] += 1;
                boundary += edge as u64;
            }
            Ok((counts, boundary))
        })
        .collect::<Result<_>>()?;
    let mut counts = vec![0u64; obs.bins()];
    let mut boundary_points = 0;
    for (c, b) in rows {
        for (k, v) in c.into_iter().enumerate() {
            counts[k] += v;
        }
        boundary_points += b;
    }
    let total = (cells * cells) as f64;
    Ok(GridAverage {
        cells,
        fractions: counts.iter().map(|&c| c as f64 / total).collect(),
        counts,
        boundary_points,
    })
}

/// Midpoint-rule average of `obs` over `a_{s,t}x`, `(s,t) ∈ [0,T]²`, with step
/// at most `h`, and the change when the step is halved.
pub fn observable_average_lattice(
    x: &LatticeState,
    big_t: f64,
    h: f64,
    obs: &Observable,
) -> Result<ObservableAverage> {
    obs.validate()?;
    if !(big_t > 0.0 && big_t.is_finite() && h > 0.0) {
        return precondition("need T > 0 and h > 0");
    }
    let cells = (big_t / h).ceil().max(1.0) as u64;
    let fine_cells = 2 * cells;
    if fine_cells.saturating_mul(fine_cells) > MAX_GRID_POINTS {
        return range(format!("grid of {fine_cells}² points exceeds {MAX_GRID_POINTS}"));
    }
    let coarse = grid_average(x, big_t, cells, obs)?;
    let fine = grid_average(x, big_t, fine_cells, obs)?;
    let delta = coarse
        .fractions
        .iter()
        .zip(&fine.fractions)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(ObservableAverage { big_t, coarse, fine, delta })
}

pub fn observable_average(
    alpha: &RealSpec,
    beta: &RealSpec,
    big_t: f64,
    h: f64,
    obs: &Observable,
) -> Result<ObservableAverage> {
    observable_average_lattice(&tau_lattice(alpha, beta), big_t, h, obs)
}

/// `δ^N` over `a₁^m a₂^n x₀`, `0 ≤ m, n < N`, binned by an observable.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridEmpirical {
    pub big_n: u64,
    pub counts: Vec<u64>,
    /// `row_counts[n][bin]` over `m` for fixed `n`.
    pub row_counts: Vec<Vec<u64>>,
    /// `bins[n][m]`
    pub bins: Vec<Vec<usize>>,
    pub boundary_points: u64,
}

impl GridEmpirical {
    /// Exact mass of each bin.
    pub fn distribution(&self) -> Vec<Ratio<u64>> {
        let total = self.big_n * self.big_n;
        self.counts.iter().map(|&c| Ratio::new(c, total)).collect()
    }

    pub fn row_distribution(&self, n: usize) -> Vec<Ratio<u64>> {
        self.row_counts[n].iter().map(|&c| Ratio::new(c, self.big_n)).collect()
    }
}

pub fn discrete_empirical(x0: &LatticeState, big_n: u64, obs: &Observable) -> Result<GridEmpirical> {
    obs.validate()?;
    if big_n == 0 || big_n > 10_000 {
        return precondition("N must lie in 1..=10000");
    }
    let reach = 2.0 * (big_n - 1) as f64;
    if reach > crate::lattice::FLOW_BUDGET {
        return range(format!(
            "a₁^m a₂^n with m + n up to {reach} exceeds the flow budget {}",
            crate::lattice::FLOW_BUDGET
        ));
    }
    let rows: Vec<(Vec<usize>, u64)> = (0..big_n)
        .into_par_iter()
        .map(|n| {
            let mut bins = Vec::with_capacity(big_n as usize);
            let mut boundary = 0;
            for m in 0..big_n {
                let x = apply_flow(x0, FlowParams { s: m as f64, t: n as f64 })?;
                let (b, edge) = obs.classify(&x)?;
                bins.push(b);
                boundary += edge as u64;
            }
            Ok((bins, boundary))
        })
        .collect::<Result<_>>()?;
    let k = obs.bins();
    let mut counts = vec![0u64; k];
    let mut row_counts = Vec::with_capacity(rows.len());
    let mut boundary_points = 0;
    let mut bins = Vec::with_capacity(rows.len());
    for (row, b) in rows {
        let mut rc = vec![0u64; k];
        for &v in &row {
            rc[v] += 1;
            counts[v] += 1;
        }
        row_counts.push(rc);
        bins.push(row);
        boundary_points += b;
    }
    Ok(GridEmpirical { big_n, counts, row_counts, bins, boundary_points })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri(s: f64, t: f64, h: f64) -> Triangle {
        Triangle { s_max: s, t_max: t, hyp: h, slack: 0.0 }
    }

    #[test]
    fn empty_union() {
        let b = union_area(&[], 3.0, 8);
        assert_eq!((b.lower, b.upper), (0.0, 0.0));
    }

    #[test]
    fn single_triangle_converges() {
        // leg 1.5 inside [0,4]²: area 1.125
        let t = tri(3.0, 2.5, 4.0);
        let exact = 1.125 / 16.0;
        let mut prev = union_area(&[t], 4.0, 4);
        for d in [6, 8, 10] {
            let b = union_area(&[t], 4.0, d);
            assert!(b.lower <= exact && exact <= b.upper);
            assert!(b.lower >= prev.lower && b.upper <= prev.upper);
            prev = b;
        }
        assert!(prev.upper - prev.lower < 0.01);
    }

    #[test]
    fn diagonal_half_plane() {
        // ℤ³ at ε = 1/e: X_ε is s + t ≥ 1, which covers 7/8 of [0,2]²
        let eps = (-1f64).exp();
        let b = escape_fraction_lattice(&LatticeState::identity(), eps, 2.0, 10).unwrap();
        assert!(b.contains(0.875), "{b:?}");
        assert!(b.upper - b.lower < 0.01);
    }

    #[test]
    fn constant_observable() {
        let a = RealSpec::sqrt(2).unwrap();
        let b = RealSpec::sqrt(3).unwrap();
        let avg = observable_average(&a, &b, 1.0, 0.5, &Observable::Constant).unwrap();
        assert_eq!(avg.coarse.fractions, vec![1.0]);
        assert_eq!(avg.delta, 0.0);
    }

    #[test]
    fn rows_average_to_whole() {
        let x = tau_lattice(&RealSpec::sqrt(2).unwrap(), &RealSpec::sqrt(3).unwrap());
        let g = discrete_empirical(&x, 6, &Observable::SystoleBins(vec![0.1, 0.3])).unwrap();
        let whole = g.distribution();
        for b in 0..3 {
            let mean: Ratio<u64> = (0..6).map(|n| g.row_distribution(n)[b]).sum::<Ratio<u64>>() / 6;
            assert_eq!(mean, whole[b]);
        }
        assert_eq!(whole.iter().sum::<Ratio<u64>>(), Ratio::from_integer(1));
    }

    #[test]
    fn single_point_grid() {
        let g = discrete_empirical(&LatticeState::identity(), 1, &Observable::SystoleBins(vec![0.5])).unwrap();
        assert_eq!(g.counts, vec![0, 1]);
    }
}
