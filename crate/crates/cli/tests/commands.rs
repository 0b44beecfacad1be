use std::path::Path;
use std::process::{Command, Output};

use bcl::formats::{read_histogram, read_pi_trace};
use bcl_core::estimators::beta_cdf;
use bcl_core::rng::seeded;
use rand::Rng;
use serde_json::Value;

fn bcl(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bcl"))
        .args(args)
        .current_dir(dir)
        .env_remove("BCL_THREADS")
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn fractions(v: &Value, key: &str) -> Vec<String> {
    v[key].as_array().unwrap().iter().map(|e| e["fraction"].as_str().unwrap().to_owned()).collect()
}

#[test]
fn exact3_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = bcl(dir.path(), &["exact3", "--k-max", "6", "--init", "list:0.25,0.5,0.75", "--out", "m.json"]);
    assert!(out.status.success());
    let v = json(&dir.path().join("m.json"));
    assert_eq!(fractions(&v, "moments")[..4], ["1/2", "29/96", "13/64", "873/5888"]);
    assert_eq!(fractions(&v, "theta")[4], "375/368");
    assert_eq!(v["theta"][6]["num"], "76693");
    assert_eq!(v["theta"][6]["den"], "22080");

    bcl(dir.path(), &["exact3", "--k-max", "3", "--init", "uniform", "--out", "u.json"]);
    assert_eq!(fractions(&json(&dir.path().join("u.json")), "moments"), ["1/2", "1/3", "1/4"]);

    bcl(dir.path(), &["exact3", "--k-max", "0", "--out", "z.json"]);
    let z = json(&dir.path().join("z.json"));
    assert_eq!(fractions(&z, "theta"), ["1/1"]);
    assert!(z["moments"].as_array().unwrap().is_empty());

    assert_eq!(bcl(dir.path(), &["exact3", "--k-max", "41"]).status.code(), Some(2));
    assert_eq!(bcl(dir.path(), &["exact3", "--init", "list:1,1,2"]).status.code(), Some(2));
}

#[test]
fn simulate_is_thread_independent_and_replayable() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let flags = [
        "simulate", "--n-points", "3", "--dim", "1", "--replicas", "3000", "--init", "list:0.25,0.5,0.75",
        "--tol", "1e-4", "--seed", "7", "--out-hist", "h.csv", "--out-summary", "s.json",
    ];
    let one: Vec<&str> = flags.iter().copied().chain(["--threads", "1"]).collect();
    let three: Vec<&str> = flags.iter().copied().chain(["--threads", "3"]).collect();
    assert!(bcl(a.path(), &one).status.success());
    assert!(bcl(b.path(), &three).status.success());
    let ha = std::fs::read(a.path().join("h.csv")).unwrap();
    assert_eq!(ha, std::fs::read(b.path().join("h.csv")).unwrap());
    let (mut sa, mut sb) = (json(&a.path().join("s.json")), json(&b.path().join("s.json")));
    assert_eq!(sa["runtime"]["threads"], 1);
    assert_eq!(sb["runtime"]["threads"], 3);
    sa.as_object_mut().unwrap().remove("runtime");
    sb.as_object_mut().unwrap().remove("runtime");
    assert_eq!(sa, sb);

    let h = read_histogram(&ha[..]).unwrap();
    assert_eq!(h.total(), 3000);
    assert_eq!(sa["replicas"], 3000);

    // Replaying the echoed config reproduces the histogram.
    let c = tempfile::tempdir().unwrap();
    std::fs::copy(a.path().join("s.json"), c.path().join("prev.json")).unwrap();
    assert!(bcl(c.path(), &["simulate", "--config", "prev.json", "--out-hist", "h.csv", "--out-summary", "s.json"]).status.success());
    assert_eq!(ha, std::fs::read(c.path().join("h.csv")).unwrap());
}

#[test]
fn simulate_rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let out = bcl(dir.path(), &["simulate", "--init", "list:0.5,0.5,0.7", "--replicas", "5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("distinct"));
    assert_eq!(bcl(dir.path(), &["simulate", "--mode", "fast"]).status.code(), Some(2));
    assert_eq!(bcl(dir.path(), &["simulate", "--tol", "-1", "--replicas", "1"]).status.code(), Some(2));
    assert_eq!(bcl(dir.path(), &["simulate", "--model", "modified3", "--dim", "2", "--replicas", "1"]).status.code(), Some(2));
    let io = bcl(dir.path(), &["simulate", "--replicas", "10", "--out-hist", "missing/dir/h.csv"]);
    assert_eq!(io.status.code(), Some(3));
}

#[test]
fn simulate_multi_dimensional_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = bcl(
        dir.path(),
        &["simulate", "--n-points", "4", "--dim", "2", "--replicas", "200", "--out-hist", "h.csv", "--out-samples", "x.csv", "--out-trace", "t.csv", "--trace-stride", "50", "--out-summary", "s.json"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for c in 0..2 {
        let h = read_histogram(std::fs::File::open(dir.path().join(format!("h_x{c}.csv"))).unwrap()).unwrap();
        assert_eq!(h.total(), 200);
    }
    let samples = std::fs::read_to_string(dir.path().join("x.csv")).unwrap();
    assert_eq!(samples.lines().nth(1), Some("xi0,xi1"));
    assert_eq!(samples.lines().count(), 202);
    let trace = std::fs::read_to_string(dir.path().join("t.csv")).unwrap();
    assert_eq!(trace.lines().nth(1), Some("t,F,D,mu_prime_0,mu_prime_1"));
    let s = json(&dir.path().join("s.json"));
    assert_eq!(s["moments"].as_array().unwrap().len(), 12);
}

#[test]
fn threads_env_overrides_flag() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_bcl"))
        .args(["simulate", "--replicas", "20", "--threads", "1", "--out-summary", "s.json"])
        .current_dir(dir.path())
        .env("BCL_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(json(&dir.path().join("s.json"))["runtime"]["threads"], 2);
}

/// Beta(β, β) draws by inverting the CDF.
fn beta_samples(beta: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = seeded(seed);
    (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if beta_cdf(mid, beta).unwrap() < u {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

#[test]
fn fit_beta_recovers_shape() {
    let dir = tempfile::tempdir().unwrap();
    let xs = beta_samples(1.5, 20_000, 3);
    let text: String = std::iter::once("xi".to_owned()).chain(xs.iter().map(|x| x.to_string())).collect::<Vec<_>>().join("\n");
    std::fs::write(dir.path().join("x.csv"), text).unwrap();
    assert!(bcl(dir.path(), &["fit-beta", "--in-samples", "x.csv", "--out", "f.json"]).status.success());
    let f = json(&dir.path().join("f.json"));
    assert!((f["beta_star"].as_f64().unwrap() - 1.5).abs() < 0.1, "{f}");
    assert!(f["kappa"].as_f64().unwrap() < 0.02);
    assert_eq!(f["n"], 20_000);

    // Binned input.
    let mut h = bcl_core::estimators::Histogram::unit(200);
    h.extend(xs.iter().copied());
    let mut buf = Vec::new();
    bcl::formats::write_histogram(&mut buf, &h, &bcl::config::ExperimentConfig::new("test")).unwrap();
    std::fs::write(dir.path().join("h.csv"), buf).unwrap();
    assert!(bcl(dir.path(), &["fit-beta", "--in-hist", "h.csv", "--out", "g.json"]).status.success());
    let g = json(&dir.path().join("g.json"));
    assert!((g["beta_star"].as_f64().unwrap() - 1.5).abs() < 0.1, "{g}");
}

#[test]
fn fit_beta_errors() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("empty.csv"), "xi\n").unwrap();
    assert_eq!(bcl(dir.path(), &["fit-beta", "--in-samples", "empty.csv"]).status.code(), Some(2));
    assert_eq!(bcl(dir.path(), &["fit-beta", "--in-samples", "nope.csv"]).status.code(), Some(3));
    assert_eq!(bcl(dir.path(), &["fit-beta"]).status.code(), Some(2));
    std::fs::write(dir.path().join("bad.csv"), "bin_left,bin_right,count\n0,1,zz\n").unwrap();
    assert_eq!(bcl(dir.path(), &["fit-beta", "--in-hist", "bad.csv"]).status.code(), Some(2));
}

#[test]
fn pi_trace_command() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(bcl(dir.path(), &["pi-trace", "--steps", "10", "--dim", "2"]).status.code(), Some(2));
    assert!(bcl(dir.path(), &["pi-trace", "--steps", "0", "--out", "e.csv"]).status.success());
    assert!(read_pi_trace(std::fs::File::open(dir.path().join("e.csv")).unwrap()).unwrap().is_empty());
    assert!(bcl(dir.path(), &["pi-trace", "--steps", "20000", "--stride", "1000", "--seed", "3", "--out", "p.csv"]).status.success());
    let rows = read_pi_trace(std::fs::File::open(dir.path().join("p.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 20);
    let last = rows.last().unwrap();
    assert_eq!(last.t, 20_000);
    assert!((last.pi_n - last.core_mean).abs() < 0.1, "{last:?}");
}

#[test]
fn selftest_command() {
    let dir = tempfile::tempdir().unwrap();
    let ok = bcl(dir.path(), &["selftest", "--quick"]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("all 6 checks passed"));
    let bad = bcl(dir.path(), &["selftest", "--quick", "--inject-fault"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stdout).contains("FAIL sandwich"));
}
