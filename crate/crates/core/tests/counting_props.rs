use llab::counting::{self, count_below, count_exact, normalized_count, CountOptions, Mode};
use llab::realnum::{littlewood_cmp, parse_rational, Decision, RealSpec};
use num_rational::BigRational;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sqrt(d: u64) -> RealSpec {
    RealSpec::sqrt(d).unwrap()
}

fn eps(text: &str) -> BigRational {
    parse_rational(text).unwrap()
}

fn opts(threads: Option<usize>) -> CountOptions {
    CountOptions { threads, store_hits: false }
}

#[test]
fn parallel_matches_serial() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let pool = [2u64, 3, 5, 6, 7, 10, 11, 13];
    for _ in 0..10 {
        let a = sqrt(pool[rng.gen_range(0..pool.len())]);
        let b = sqrt(pool[rng.gen_range(0..pool.len())]);
        let e = BigRational::new(rng.gen_range(1..45).into(), 100.into());
        let n = rng.gen_range(1_000_000..3_000_000);
        let one = count_below(&a, &b, &e, n, Mode::Strict, &opts(Some(1))).unwrap();
        let many = count_below(&a, &b, &e, n, Mode::Strict, &opts(Some(4))).unwrap();
        assert_eq!((one.count_strict, one.count_closed), (many.count_strict, many.count_closed));
        assert_eq!(one.running_min, many.running_min);
    }
}

#[test]
fn stored_hits_agree_with_exact_comparison() {
    let (a, b) = (sqrt(2), sqrt(3));
    let e = eps("0.1");
    let big_n = 100_000_000;
    let r = count_below(&a, &b, &e, big_n, Mode::Strict, &CountOptions { threads: None, store_hits: true }).unwrap();
    let hits: Vec<u64> = r.hits.unwrap().iter().map(|h| h.n).collect();
    for &n in &hits {
        assert_eq!(littlewood_cmp(n, &a, &b, &e).0, Decision::Less, "n = {n}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..10_000 {
        let n = rng.gen_range(1..=big_n);
        let d = littlewood_cmp(n, &a, &b, &e).0;
        assert_eq!(hits.binary_search(&n).is_ok(), d == Decision::Less, "n = {n}");
    }
}

#[test]
fn fast_path_matches_exact_for_other_inputs() {
    let cases = [
        ("cf:[0;1,100,10000]|periodic:[1]", "cf:[0;3,200,5000]|periodic:[2]", "0.2"),
        ("surd:(1+1*sqrt(5))/2", "surd:(0+1*sqrt(7))/1", "0.3"),
        ("dec:1.32471795724474602596090885447809734073440405690173336453401505030282785124554759405470016",
         "dec:1.75487766624669276004950889635852869189460661777279314398928397064608065512808108977633073",
         "0.25"),
    ];
    for (a, b, e) in cases {
        let (a, b): (RealSpec, RealSpec) = (a.parse().unwrap(), b.parse().unwrap());
        let e = eps(e);
        let fast = count_below(&a, &b, &e, 20_000, Mode::Strict, &opts(None)).unwrap();
        let (strict, closed, boundary) = count_exact(&a, &b, &e, 20_000);
        assert_eq!((fast.count_strict, fast.count_closed), (strict, closed));
        assert!(boundary.is_empty());
    }
}

#[test]
fn symmetries() {
    let e = eps("0.2");
    let n = 500_000;
    let c = |a: &RealSpec, b: &RealSpec| count_below(a, b, &e, n, Mode::Strict, &opts(None)).unwrap().count_strict;
    let (a, b) = (sqrt(2), sqrt(3));
    let base = c(&a, &b);
    assert_eq!(base, c(&b, &a));
    assert_eq!(base, c(&a.add_integer(1), &b));
    assert_eq!(base, c(&a.neg(), &b));
}

#[test]
fn normalized_count_at_log_ten_half() {
    let a = RealSpec::rational(1, 2).unwrap();
    let b = RealSpec::rational(1, 3).unwrap();
    let t = 10f64.ln() / 2.0;
    let r = normalized_count(&a, &b, &eps("0.1"), t.next_down(), Mode::Strict, Some(0.3), &opts(None)).unwrap();
    assert_eq!((r.big_n, r.count), (9, 6));
    assert!((r.comparison.unwrap() - 0.3 / (3.0 * std::f64::consts::LN_2)).abs() < 1e-15);
}

#[test]
fn refusals() {
    let (a, b) = (sqrt(2), sqrt(3));
    assert!(count_below(&a, &b, &eps("0.5"), 10, Mode::Strict, &opts(None)).is_err());
    assert!(count_below(&a, &b, &eps("0.1"), (1 << 40) + 1, Mode::Strict, &opts(None)).is_err());
    assert!(counting::horizon(14.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn counts_are_ordered_and_monotone(d1 in 2u64..30, d2 in 2u64..30, e in 1i64..49, n in 1u64..5000) {
        prop_assume!(((d1 as f64).sqrt().fract() != 0.0) && ((d2 as f64).sqrt().fract() != 0.0));
        let (a, b) = (sqrt(d1), sqrt(d2));
        let e = BigRational::new(e.into(), 100.into());
        let r = count_below(&a, &b, &e, n, Mode::Strict, &opts(None)).unwrap();
        prop_assert!(r.count_strict <= r.count_closed);
        prop_assert!(r.count_closed <= r.count_strict + r.boundary_cases.len() as u64 + (r.count_closed - r.count_strict));
        let more = count_below(&a, &b, &e, n + 100, Mode::Strict, &opts(None)).unwrap();
        prop_assert!(more.count_strict >= r.count_strict);
    }

    #[test]
    fn normalized_count_times_t_is_monotone(t in 0.5f64..4.0, dt in 0.0f64..1.0) {
        let (a, b) = (sqrt(2), sqrt(3));
        let e = eps("0.3");
        let lo = normalized_count(&a, &b, &e, t, Mode::Strict, None, &opts(None)).unwrap();
        let hi = normalized_count(&a, &b, &e, t + dt, Mode::Strict, None, &opts(None)).unwrap();
        prop_assert!(hi.count >= lo.count);
    }
}
