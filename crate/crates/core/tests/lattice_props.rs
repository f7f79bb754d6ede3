use llab::lattice::{self, apply_flow, in_x_eps, tau_lattice, FlowParams, LatticeState};
use llab::realnum::{parse_rational, Dd, RealSpec};
use proptest::prelude::*;

fn tau(a: u64, b: u64) -> LatticeState {
    tau_lattice(&RealSpec::sqrt(a).unwrap(), &RealSpec::sqrt(b).unwrap())
}

fn max_entry_diff(x: &LatticeState, y: &LatticeState) -> f64 {
    let (bx, by) = (x.basis(), y.basis());
    let mut m: f64 = 0.0;
    for c in 0..3 {
        for r in 0..3 {
            let scale = bx[c][r].abs().to_f64().max(1.0);
            m = m.max((bx[c][r] - by[c][r]).abs().to_f64() / scale);
        }
    }
    m
}

#[test]
fn zero_flow_is_identity() {
    let x = tau(2, 3);
    let y = apply_flow(&x, FlowParams::new(0.0, 0.0).unwrap()).unwrap();
    assert_eq!(max_entry_diff(&x, &y), 0.0);
}

#[test]
fn diagonal_orbit_closed_form() {
    let t = lattice::orbit_trace(&RealSpec::integer(0), &RealSpec::integer(0), 2.0, 1.0).unwrap();
    assert_eq!(t.points.len(), 9);
    for p in &t.points {
        let want = (-(p.s + p.t)).exp();
        assert!(p.systole.norm.contains(want) || (p.systole.norm.mid() - want).abs() < 1e-15);
    }
}

#[test]
fn short_trace_is_single_point() {
    let t = lattice::orbit_trace(&RealSpec::integer(0), &RealSpec::integer(0), 0.5, 1.0).unwrap();
    assert_eq!(t.points.len(), 1);
    assert!(t.points[0].systole.norm.contains(1.0));
}

#[test]
fn membership_examples() {
    let z = LatticeState::identity();
    assert!(!in_x_eps(&z, &parse_rational("0.4").unwrap()).unwrap().inside);
    let d = apply_flow(&z, FlowParams::new(1.0, 1.0).unwrap()).unwrap();
    assert!(in_x_eps(&d, &parse_rational("0.2").unwrap()).unwrap().inside);
    assert!(!in_x_eps(&d, &parse_rational("0.1").unwrap()).unwrap().inside);
}

#[test]
fn systole_matches_excursion_candidates_at_two_two() {
    // brute force over |n| ≤ e^{s+t} with the nearest companions
    let x = apply_flow(&tau(2, 3), FlowParams::new(2.0, 2.0).unwrap()).unwrap();
    let (a, b) = (2f64.sqrt(), 3f64.sqrt());
    let mut best = f64::INFINITY;
    for n in 0..=(4f64.exp() as i64) {
        for dm1 in -1..=1 {
            for dm2 in -1..=1 {
                let m1 = -(n as f64 * a).round() + dm1 as f64;
                let m2 = -(n as f64 * b).round() + dm2 as f64;
                if n == 0 && m1 == 0.0 && m2 == 0.0 {
                    continue;
                }
                let v = [
                    (-4f64).exp() * n as f64,
                    2f64.exp() * (n as f64 * a + m1),
                    2f64.exp() * (n as f64 * b + m2),
                ];
                best = best.min(v.iter().map(|c| c.abs()).fold(0.0, f64::max));
            }
        }
    }
    let s = x.systole();
    assert!((s.norm.mid() - best).abs() < 1e-9, "{} vs {best}", s.norm.mid());
}

#[test]
fn trace_minimum_matches_excursion_oracle() {
    let (a, b) = (RealSpec::sqrt(2).unwrap(), RealSpec::sqrt(3).unwrap());
    let tr = lattice::orbit_trace(&a, &b, 3.0, 0.25).unwrap();
    let (sa, sb) = (2f64.sqrt(), 3f64.sqrt());
    // oracle: sup-norm of (n, nα+m₁, nβ+m₂) at each grid point over n ≤ e^{2T}
    let mut best = f64::INFINITY;
    for p in &tr.points {
        for n in 1..=(6f64.exp() as i64) {
            let r1 = n as f64 * sa - (n as f64 * sa).round();
            let r2 = n as f64 * sb - (n as f64 * sb).round();
            let v = ((-(p.s + p.t)).exp() * n as f64)
                .max(p.s.exp() * r1.abs())
                .max(p.t.exp() * r2.abs());
            best = best.min(v);
        }
        best = best.min(p.s.exp().min(p.t.exp()));
    }
    assert!((tr.min().systole.norm.mid() - best).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn group_law(s1 in 0.0f64..10.0, t1 in 0.0f64..10.0, s2 in 0.0f64..10.0, t2 in 0.0f64..10.0) {
        let x = tau(2, 3);
        let two = apply_flow(&apply_flow(&x, FlowParams::new(s1, t1).unwrap()).unwrap(), FlowParams::new(s2, t2).unwrap()).unwrap();
        let once = apply_flow(&x, FlowParams::new(s1 + s2, t1 + t2).unwrap()).unwrap();
        prop_assert!(max_entry_diff(&two, &once) <= 1e-12);
    }

    #[test]
    fn determinant_stays_one(s in 0.0f64..25.0, t in 0.0f64..25.0) {
        let y = apply_flow(&tau(5, 7), FlowParams::new(s, t).unwrap()).unwrap();
        prop_assert!((y.det() - Dd::ONE).abs().to_f64() <= 1e-12);
    }

    #[test]
    fn systole_symmetric_under_swap(s in 0.0f64..6.0, t in 0.0f64..6.0) {
        let x = apply_flow(&tau(2, 3), FlowParams::new(s, t).unwrap()).unwrap();
        let y = apply_flow(&tau(3, 2), FlowParams::new(t, s).unwrap()).unwrap();
        prop_assert!((x.systole().norm.mid() - y.systole().norm.mid()).abs() <= 1e-12);
    }

    #[test]
    fn systole_at_most_one(s in 0.0f64..20.0, t in 0.0f64..20.0) {
        let x = apply_flow(&tau(2, 3), FlowParams::new(s, t).unwrap()).unwrap();
        prop_assert!(x.systole().norm.hi <= 1.0 + 1e-9);
    }

    #[test]
    fn conjugation_rates(u1 in -10.0f64..10.0, u2 in -10.0f64..10.0) {
        let e = Dd::ONE.exp();
        let (u1, u2) = (Dd::from_f64(u1), Dd::from_f64(u2));
        let got = lattice::conjugate(FlowParams::new(0.0, 1.0).unwrap(), &lattice::unipotent(u1, u2));
        let want = lattice::unipotent(e * u1, e * e * u2);
        for i in 0..3 {
            for j in 0..3 {
                prop_assert!((got[i][j] - want[i][j]).abs().to_f64() <= 1e-12);
            }
        }
    }
}
