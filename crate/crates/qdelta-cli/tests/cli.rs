use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qdelta_cli::schema;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn qdelta(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qdelta")).args(args).output().expect("binary runs")
}

fn run(sub: &str, config: &Path, out: &Path) -> Output {
    qdelta(&[sub, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "--deterministic"])
}

fn patched(dir: &Path, name: &str, edits: &[(&str, &str)]) -> PathBuf {
    let mut text = std::fs::read_to_string(fixture(name)).unwrap();
    for (from, to) in edits {
        assert!(text.contains(from), "{from}");
        text = text.replace(from, to);
    }
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn count_sphere_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run("count", &fixture("sphere.cfg"), &a).status.success());
    assert!(run("count", &fixture("sphere.cfg"), &b).status.success());
    let first = std::fs::read(a.join("count.json")).unwrap();
    assert_eq!(first, std::fs::read(b.join("count.json")).unwrap());
    let v = json(&a.join("count.json"));
    assert_eq!(v["result"]["raw_count"], 6);
    // six points at distance 1 from the centre of a radius-1.5 ball bump
    let w = (-1.0f64 / (1.0 - 1.0 / 2.25)).exp();
    assert!((v["result"]["gamma"].as_f64().unwrap() - 6.0 * w).abs() < 1e-14);

    // the echo is itself a config and reproduces the run
    let c = dir.path().join("c");
    assert!(run("count", &a.join("config_echo.txt"), &c).status.success());
    assert_eq!(first, std::fs::read(c.join("count.json")).unwrap());
}

#[test]
fn missing_field_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = patched(dir.path(), "sphere.cfg", &[("m0 = 1\n", "")]);
    let out = run("count", &cfg, &dir.path().join("o"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("m0"));
    let none = qdelta(&["count", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(none.status.code(), Some(2));
}

#[test]
fn box_bound_is_a_resource_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = patched(dir.path(), "hyperboloid.cfg", &[("p0 = 5", "p0 = 101"), ("h = 1", "h = 3")]);
    assert_eq!(run("count", &cfg, &dir.path().join("o")).status.code(), Some(3));
}

#[test]
fn expsum_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    assert!(run("expsum", &fixture("hyperboloid.cfg"), &out).status.success());
    let rows = schema::EXPSUM.validate(std::fs::File::open(out.join("expsum.csv")).unwrap()).unwrap();
    assert_eq!(rows, 50);
    let text = std::fs::read_to_string(out.join("expsum.csv")).unwrap();
    // S̃_1(0) counts the single residue class mod 1
    assert!(text.lines().nth(1).unwrap().starts_with("1,1,1,0,0,0,1,0,1,zero"));
}

#[test]
fn density_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    assert!(run("density", &fixture("hyperboloid.cfg"), &out).status.success());
    let rows = schema::DENSITY.validate(std::fs::File::open(out.join("density.csv")).unwrap()).unwrap();
    // p₀ first, then the other 24 primes below 100
    assert_eq!(rows, 25);
    let v = json(&out.join("density.json"));
    assert_eq!(v["square"], true);
    assert_eq!(v["obstructed"], false);
}

#[test]
fn delta_check_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    assert!(run("delta-check", &fixture("delta.cfg"), &out).status.success());
    let file = out.join("delta_check.csv");
    assert_eq!(schema::DELTA_CHECK.validate(std::fs::File::open(&file).unwrap()).unwrap(), 102);
    let mut reader = csv::Reader::from_path(&file).unwrap();
    let worst_at_5 = reader
        .records()
        .map(|r| r.unwrap())
        .filter(|r| &r[1] == "5")
        .map(|r| r[3].parse::<f64>().unwrap())
        .fold(0.0f64, f64::max);
    assert!(worst_at_5 < 0.02);
}

#[test]
fn compare_obstructed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let res = run("compare", &fixture("obstructed.cfg"), &out);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let v = json(&out.join("report.json"));
    assert_eq!(v["report"]["obstructed"], true);
    for row in v["report"]["rows"].as_array().unwrap() {
        assert_eq!(row["gamma"], 0.0);
        assert!(row["main"].as_array().unwrap().iter().all(|m| m == 0.0));
    }
    assert_eq!(v["poisson"].as_array().unwrap().len(), 1);
    assert_eq!(v["pass"], true);
    let checked = qdelta(&["check-csv", "--out", out.to_str().unwrap()]);
    assert!(checked.status.success());
    assert!(String::from_utf8_lossy(&checked.stdout).contains("compare.csv"));
}

#[test]
fn compare_sphere_reports_both_candidates() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let res = run("compare", &fixture("sphere.cfg"), &out);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let v = json(&out.join("report.json"));
    let report = &v["report"];
    assert_eq!(report["square"], false);
    let labels: Vec<&str> = report["candidates"].as_array().unwrap().iter().map(|c| c["label"].as_str().unwrap()).collect();
    assert_eq!(labels, ["I*S", "I*S*L1"]);
    assert!((report["l_one"].as_f64().unwrap() - std::f64::consts::FRAC_PI_4).abs() < 1e-10);
    assert!(report["tracked"].is_string());
    assert_eq!(report["secondary"].as_array().unwrap().len(), 2);
    assert_eq!(schema::COMPARE.validate(std::fs::File::open(out.join("compare.csv")).unwrap()).unwrap(), 6);
}

#[test]
fn tolerance_failure_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    // an absurd ratio window cannot hold
    let cfg = patched(dir.path(), "sphere.cfg", &[("compare.poisson_n_max = 9", "compare.poisson_n_max = 0\ntolerance.ratio = 10 11")]);
    assert_eq!(run("compare", &cfg, &dir.path().join("o")).status.code(), Some(1));
}
