use std::path::Path;
use std::process::Command;

const SQRT2: &str = "surd:(0+1*sqrt(2))/1";
const SQRT3: &str = "surd:(0+1*sqrt(3))/1";
const LIOUVILLE_A: &str = "cf:[0;1,100,10000]|periodic:[1]";
const LIOUVILLE_B: &str = "cf:[0;3,200,5000]|periodic:[2]";

fn llab(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_llab")).args(args).output().expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8_lossy(&out.stdout).into_owned())
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(llab(&["count", "--alpha", SQRT2]).0, 1);
    assert_eq!(llab(&["measure", "--nope"]).0, 1);
    assert_eq!(llab(&["count", "--alpha", "x:1", "--beta", SQRT3, "--eps", "0.1", "--big-n", "5"]).0, 1);
    assert_eq!(llab(&["--help"]).0, 0);
}

#[test]
fn bowen_verification_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("bowen.json");
    let csv = dir.path().join("bowen.csv");
    let (code, _) = llab(&[
        "verify", "bowen", "--k", "2", "--n-max", "12", "--t", "0.5",
        "--report", report.to_str().unwrap(), "--csv", csv.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&read(&report)).unwrap();
    assert_eq!(v["summary"], "pass");
    let mut rdr = csv::Reader::from_path(&csv).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["N", "count", "rate", "envelope", "ok"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 12);
    assert_eq!(&rows[0][1], "2");
}

#[test]
fn gamma_inside_the_gap_is_inconclusive() {
    // the escape fraction for these inputs is certified in [0.26731, 0.26774]
    let (code, text) = llab(&[
        "verify", "cusp", "--alpha", LIOUVILLE_A, "--beta", LIOUVILLE_B, "--eps", "0.2", "--T", "4", "--gamma", "0.2675",
    ]);
    assert_eq!(code, 3, "{text}");
    assert!(text.contains("inconclusive"));
    let (code, _) = llab(&[
        "verify", "cusp", "--alpha", LIOUVILLE_A, "--beta", LIOUVILLE_B, "--eps", "0.2", "--T", "4", "--gamma", "0.2",
    ]);
    assert_eq!(code, 0);
}

#[test]
fn count_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("hits.csv");
    let (code, text) = llab(&[
        "count", "--alpha", SQRT2, "--beta", SQRT3, "--eps", "0.1", "--big-n", "1000000", "--csv", p.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let mut rdr = csv::Reader::from_path(&p).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["n", "value_lo", "value_hi"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    let (body, footer) = rows.split_at(rows.len() - 1);
    assert_eq!(&footer[0][0], "total");
    let strict: u64 = footer[0][1].parse().unwrap();
    assert_eq!(body.len() as u64, strict);
    assert!(text.contains(&format!("count_strict = {strict}")));
    for r in body {
        let lo: f64 = r[1].parse().unwrap();
        let hi: f64 = r[2].parse().unwrap();
        assert!(lo <= hi && hi < 0.1);
        let _: u64 = r[0].parse().unwrap();
    }
}

#[test]
fn excursion_outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str| {
        let svg = dir.path().join(format!("{tag}.svg"));
        let csv = dir.path().join(format!("{tag}.csv"));
        let (code, _) = llab(&[
            "excursions", "--alpha", LIOUVILLE_A, "--beta", LIOUVILLE_B, "--eps", "0.3", "--T", "6",
            "--svg", svg.to_str().unwrap(), "--csv", csv.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        (read(&svg), read(&csv))
    };
    let (svg1, csv1) = run("a");
    let (svg2, csv2) = run("b");
    assert_eq!(svg1, svg2);
    assert_eq!(csv1, csv2);
    assert!(svg1.contains("<polygon"));
    let mut rdr = csv::Reader::from_reader(csv1.as_bytes());
    assert_eq!(rdr.headers().unwrap().len(), 10);
    for r in rdr.records() {
        let r = r.unwrap();
        let lo: f64 = r[6].parse().unwrap();
        let hi: f64 = r[7].parse().unwrap();
        assert!(lo <= hi);
        let in_xi: bool = r[8].parse().unwrap();
        assert_eq!(in_xi, !r[9].is_empty());
    }
}

#[test]
fn orbit_and_measure_csv() {
    let dir = tempfile::tempdir().unwrap();
    let orbit = dir.path().join("orbit.csv");
    let (code, _) = llab(&["orbit", "--alpha", SQRT2, "--beta", SQRT3, "--T", "1", "--step", "0.5", "--csv", orbit.to_str().unwrap()]);
    assert_eq!(code, 0);
    let mut rdr = csv::Reader::from_path(&orbit).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["s", "t", "systole_lo", "systole_hi", "n", "m1", "m2"]);
    assert_eq!(rdr.records().count(), 9);

    let measure = dir.path().join("measure.csv");
    let (code, text) = llab(&[
        "measure", "--alpha", LIOUVILLE_A, "--beta", LIOUVILLE_B, "--eps", "0.3", "--T", "4", "--depth", "10",
        "--grid", "0.5", "--obs", "systole:0.1,0.2,0.3", "--csv", measure.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{text}");
    assert!(text.contains("lower = ") && text.contains("bin 3 = "));
    let mut rdr = csv::Reader::from_path(&measure).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["quantity", "field", "value"]);
    for r in rdr.records() {
        let _: f64 = r.unwrap()[2].parse().unwrap();
    }
}

#[test]
fn entropy_orbit_coding() {
    let (code, text) = llab(&["entropy", "--alpha", SQRT2, "--beta", SQRT3, "--N", "10", "--M", "3", "--bins", "0.1,0.3"]);
    assert_eq!(code, 0);
    assert_eq!(text.lines().count(), 10);
    assert_eq!(text, llab(&["entropy", "--alpha", SQRT2, "--beta", SQRT3, "--N", "10", "--M", "3", "--bins", "0.1,0.3"]).1);
}

#[test]
fn thread_cap_gives_identical_counts() {
    let args = ["count", "--alpha", SQRT2, "--beta", SQRT3, "--eps", "0.2", "--big-n", "3000000"];
    let one = llab(&[&["--threads", "1"][..], &args[..]].concat());
    let four = llab(&[&["--threads", "4"][..], &args[..]].concat());
    assert_eq!(one, four);
}
