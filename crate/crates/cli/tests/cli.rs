//! End-to-end tests of the `gravispec` binary: exit codes, caching,
//! determinism and artifact shapes.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gravispec"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    let cache = dir.join("cache");
    let out = dir.join("out");
    bin()
        .args(args)
        .arg("--output-dir")
        .arg(&out)
        .env("GRAVISPEC_CACHE_DIR", &cache)
        .output()
        .expect("binary runs")
}

#[test]
fn invalid_exponent_exits_2_naming_range() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["steady-state", "--set", "model.k=3.6"]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("7/2"), "message should name the k-range: {err}");
}

#[test]
fn steady_state_caches_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let first = run(dir.path(), &["steady-state"]);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    assert!(String::from_utf8_lossy(&first.stderr).contains("cache store"));
    let profile = dir.path().join("out/profile.json");
    let bytes1 = std::fs::read(&profile).unwrap();

    let second = run(dir.path(), &["steady-state"]);
    assert!(second.status.success());
    assert!(
        String::from_utf8_lossy(&second.stderr).contains("cache hit"),
        "second run should log the cache hit"
    );
    let bytes2 = std::fs::read(&profile).unwrap();
    assert_eq!(bytes1, bytes2, "identical config must produce byte-identical JSON");

    // the profile round-trips with full precision
    let v: serde_json::Value = serde_json::from_slice(&bytes1).unwrap();
    assert!(v["M"].as_f64().unwrap() > 0.0);
    assert!(v["e0"].as_f64().unwrap() < 0.0);
    assert_eq!(v["r_grid"].as_array().unwrap().len(), v["U"].as_array().unwrap().len());
}

const SMALL: &[&str] = &[
    "--set",
    "grid.n_beta=4",
    "--set",
    "grid.n_e=4",
    "--set",
    "grid.n_r=30",
    "--set",
    "grid.k_max=4",
];

#[test]
fn orbits_and_bands_emit_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &[&["orbits"], SMALL].concat());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let orbits = std::fs::read_to_string(dir.path().join("out/orbits.csv")).unwrap();
    let mut lines = orbits.lines();
    let header = lines.next().unwrap();
    assert!(header.contains("T1 (time)") && header.contains("omega1 (1/time)"));
    assert_eq!(lines.count(), 16, "4x4 grid nodes");

    let out = run(dir.path(), &[&["bands"], SMALL].concat());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let bands: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/bands.json")).unwrap())
            .unwrap();
    let d1 = bands["delta1"].as_f64().unwrap();
    let cap = bands["Delta1"].as_f64().unwrap();
    assert!(d1 > 0.0 && cap > d1);
    assert!(bands["bands"].as_array().unwrap()[0][0].as_f64().unwrap() > 0.0);
}

#[test]
fn mu_curve_is_monotone_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = [&["mu-curve"], SMALL, &["--set", "spectrum.lambda_points=5"]].concat();
    let out = run(dir.path(), &args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let path = dir.path().join("out/mu_curve.csv");
    let text1 = std::fs::read_to_string(&path).unwrap();
    let mus: Vec<f64> = text1
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(mus.len(), 5);
    assert!(mus.windows(2).all(|w| w[1] >= w[0] - 1e-10), "mu_1 must be nondecreasing: {mus:?}");

    let out = run(dir.path(), &args);
    assert!(out.status.success());
    assert_eq!(text1, std::fs::read_to_string(&path).unwrap(), "reruns must be byte-identical");
}

#[test]
fn report_cross_checks_the_estimators() {
    let dir = tempfile::tempdir().unwrap();
    let args = [&["report"], SMALL, &["--set", "flow.tol=1e-8"]].concat();
    let out = run(dir.path(), &args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/report.json")).unwrap())
            .unwrap();
    assert!(report["delta1"].as_f64().unwrap() > 0.0);
    let flags = &report["agreement_flags"];
    for name in ["bs_vs_galerkin", "bs_vs_flow", "galerkin_vs_flow"] {
        assert_eq!(flags[name], serde_json::Value::Bool(true), "estimator pair {name}");
    }
    for (_, status) in report["stage_status"].as_object().unwrap() {
        assert_eq!(status.as_str().unwrap(), "ok");
    }
}
