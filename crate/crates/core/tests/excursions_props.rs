use llab::excursions::{self, project_by_vertices, project_triangle, IntervalSet, Triangle, XiMember};
use llab::realnum::{littlewood_cmp, parse_rational, Decision, RealSpec};
use llab::report::Status;
use proptest::prelude::*;

const LIOUVILLE_A: &str = "cf:[0;1,100,10000]|periodic:[1]";
const LIOUVILLE_B: &str = "cf:[0;3,200,5000]|periodic:[2]";

fn liouville() -> (RealSpec, RealSpec) {
    (LIOUVILLE_A.parse().unwrap(), LIOUVILLE_B.parse().unwrap())
}

#[test]
fn liouville_members_are_near_solutions() {
    let (a, b) = liouville();
    let eps = parse_rational("0.3").unwrap();
    let list = excursions::all_excursions(&a, &b, &eps, 6.0).unwrap();
    assert!(!list.is_empty());
    let cube = parse_rational("0.027").unwrap();
    for e in &list {
        assert_ne!(littlewood_cmp(e.n, &a, &b, &cube).0, Decision::Greater, "n = {}", e.n);
        assert!(e.leg >= -e.triangle.slack);
    }
    assert!(list.windows(2).all(|w| w[0].n < w[1].n));
}

#[test]
fn swapping_inputs_reflects_triangles() {
    let (a, b) = liouville();
    let eps = parse_rational("0.25").unwrap();
    let ab = excursions::all_excursions(&a, &b, &eps, 6.0).unwrap();
    let ba = excursions::all_excursions(&b, &a, &eps, 6.0).unwrap();
    assert_eq!(ab.len(), ba.len());
    for (x, y) in ab.iter().zip(&ba) {
        assert_eq!(x.n, y.n);
        let r = x.triangle.reflect();
        assert!((r.s_max - y.triangle.s_max).abs() < 1e-12 && (r.t_max - y.triangle.t_max).abs() < 1e-12);
    }
}

#[test]
fn empty_when_cube_below_running_minimum() {
    let (a, b) = (RealSpec::sqrt(2).unwrap(), RealSpec::sqrt(3).unwrap());
    // min n⟨n√2⟩⟨n√3⟩ over n ≤ 24413 is 0.00466 > 0.15³
    let list = excursions::all_excursions(&a, &b, &parse_rational("0.15").unwrap(), 6.0).unwrap();
    assert!(list.is_empty());
}

#[test]
fn beyond_the_square_is_empty() {
    let (a, b) = (RealSpec::sqrt(2).unwrap(), RealSpec::sqrt(3).unwrap());
    // log(169/0.45) > 2·2
    let e = excursions::excursion_for(169, &a, &b, &parse_rational("0.45").unwrap(), 2.0).unwrap();
    assert!(e.is_none());
}

#[test]
fn cover_identity_with_triangles() {
    let (a, b) = liouville();
    let eps = parse_rational("0.3").unwrap();
    let pts: Vec<(f64, f64)> = llab::cli::quasi_random_points(4000, 3).into_iter().map(|(u, v)| (6.0 * u, 6.0 * v)).collect();
    let r = excursions::cover_check(&a, &b, &eps, 6.0, &pts, 1e-9).unwrap();
    assert!(r.excursions > 0);
    assert!(r.disagreements.is_empty(), "{:?}", &r.disagreements[..r.disagreements.len().min(5)]);
    assert!(r.agreements >= 3990);
}

#[test]
fn uniqueness_sweep_agrees_with_excursion_list() {
    let (a, b) = liouville();
    let eps = parse_rational("0.3").unwrap();
    let sweep = excursions::uniqueness_sweep(&a, &b, &eps, 5.0, 5000).unwrap();
    let direct = (1..=5000u64)
        .filter(|&n| excursions::excursion_for(n, &a, &b, &eps, 5.0).unwrap().is_some())
        .count() as u64;
    assert_eq!(sweep.max_multiplicity, 1);
    assert_eq!(sweep.qualifying, direct);
}

#[test]
fn cusp_report_on_liouville_pair() {
    let (a, b) = liouville();
    let r = excursions::verify_cusp_proposition(&a, &b, &parse_rational("0.2").unwrap(), 6.0, 0.3, 12).unwrap();
    assert_ne!(r.status, Status::Fail);
    assert!(r.checks.iter().all(|c| c.status != Status::Fail));
}

#[test]
fn cusp_rejects_rationals() {
    let z = RealSpec::integer(0);
    assert!(excursions::verify_cusp_proposition(&z, &z, &parse_rational("0.2").unwrap(), 4.0, 0.1, 8).is_err());
}

#[test]
fn degenerate_leg_projects_to_a_point() {
    let t = Triangle { s_max: 1.0, t_max: 1.0, hyp: 2.0, slack: 0.0 };
    assert_eq!(project_triangle(&t, 3.0).unwrap(), (2.0, 2.0));
}

fn sweep_union(items: &[(f64, f64)]) -> f64 {
    // independent oracle: sort endpoints and accumulate covered length
    let mut ev: Vec<(f64, i32)> = items.iter().flat_map(|&(a, b)| [(a, 1), (b, -1)]).collect();
    ev.sort_by(|x, y| x.0.total_cmp(&y.0).then(y.1.cmp(&x.1)));
    let (mut depth, mut last, mut total) = (0, 0.0, 0.0);
    for (x, d) in ev {
        if depth > 0 {
            total += x - last;
        }
        depth += d;
        last = x;
    }
    total
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn projection_formula_matches_polygon(s in -2.0f64..12.0, t in -2.0f64..12.0, leg in 0.0f64..6.0, big_t in 0.5f64..8.0) {
        let tri = Triangle { s_max: s, t_max: t, hyp: s + t - leg, slack: 0.0 };
        if let Some((lo, hi)) = project_by_vertices(&tri, big_t) {
            if tri.meets_square(big_t).0 {
                let (a, b) = project_triangle(&tri, big_t).unwrap();
                prop_assert!((a - lo).abs() < 1e-9 && (b - hi).abs() < 1e-9, "{tri:?}");
            }
        }
    }

    #[test]
    fn maximal_union_preserved(raw in prop::collection::vec((0.0f64..100.0, 0.0f64..10.0), 1..1000)) {
        let items: Vec<(f64, f64)> = raw.iter().map(|&(a, l)| (a, a + l)).collect();
        let m = excursions::maximal_intervals(&items);
        prop_assert!((m.union_all.measure() - sweep_union(&items)).abs() < 1e-9);
        let positive: Vec<(f64, f64)> = items.iter().copied().filter(|i| i.1 > i.0).collect();
        prop_assert!((m.union_kept.measure() - sweep_union(&positive)).abs() < 1e-9);
        for &i in &m.kept {
            for (j, other) in items.iter().enumerate() {
                let strict_super = other.0 <= items[i].0 && other.1 >= items[i].1 && *other != items[i];
                prop_assert!(i == j || !strict_super);
            }
        }
    }

    #[test]
    fn interval_set_is_sorted_and_disjoint(raw in prop::collection::vec((0.0f64..50.0, 0.0f64..5.0), 0..200)) {
        let s = IntervalSet::from_intervals(raw.iter().map(|&(a, l)| (a, a + l)));
        prop_assert!(s.parts().windows(2).all(|w| w[0].1 < w[1].0));
        for &(a, l) in &raw {
            prop_assert!(s.contains(a) && s.contains(a + l));
        }
    }

    #[test]
    fn class_structure_holds(odd in prop::collection::vec(1u64..50, 1..6), shifts in prop::collection::vec(0u32..8, 1..6), lens in prop::collection::vec(0.1f64..20.0, 1..6)) {
        let members: Vec<XiMember> = odd.iter().zip(&shifts).zip(&lens)
            .map(|((&o, &s), &l)| XiMember { n: (2 * o + 1) << s, lo: 0.0, hi: l, slack: 0.0 })
            .collect();
        let mut seen = std::collections::BTreeSet::new();
        let members: Vec<XiMember> = members.into_iter().filter(|m| seen.insert(m.n)).collect();
        for c in excursions::equivalence_classes(&members) {
            prop_assert!(c.power_of_two);
            prop_assert!(c.members.windows(2).all(|w| w[0] < w[1]));
            let union: std::collections::BTreeSet<u64> = c.members.iter()
                .flat_map(|&n| excursions::lambda_set(n, members.iter().find(|m| m.n == n).unwrap().lambda()))
                .collect();
            prop_assert_eq!(union.into_iter().collect::<Vec<_>>(), c.merged.clone());
        }
    }
}
