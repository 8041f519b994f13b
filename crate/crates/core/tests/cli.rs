use std::path::Path;
use std::process::{Command, Output};

use projsmooth::grid_field::io::read_field;
use serde_json::Value;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_projsmooth"))
        .args(args)
        .env("PROJSMOOTH_THREADS", "1")
        .output()
        .unwrap()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn fixture(dir: &Path, name: &str, extra: &[&str]) -> String {
    let file = path(dir, &format!("{name}.json"));
    let mut args = vec!["fixture", "--output", &file];
    args.extend_from_slice(extra);
    let out = bin(&args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    file
}

#[test]
fn fixture_lipschitz_chern() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixture(dir.path(), "loring", &["--name", "loring_k", "--k", "2", "--grid", "32"]);
    let field = read_field(&f).unwrap();
    assert_eq!(field.grid().sizes(), &[32, 32]);

    let lip = stdout_json(&bin(&["lipschitz", "--input", &f]));
    assert_eq!(lip["pair_count"], 1024 * 1023 / 2);
    assert!(lip["value"].as_f64().unwrap() > 6.0);

    let chern = stdout_json(&bin(&["chern", "--input", &f]));
    assert_eq!(chern["chern"], -2);
}

#[test]
fn negative_k_and_one_dimensional_random() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixture(dir.path(), "bott", &["--name", "bott_pullback", "--k", "-1", "--grid", "24"]);
    assert_eq!(stdout_json(&bin(&["chern", "--input", &f]))["chern"], 1);
    let r = fixture(
        dir.path(),
        "random",
        &["--name", "random", "--grid", "40", "--dim", "1", "--m", "3", "--seed", "5"],
    );
    let field = read_field(&r).unwrap();
    assert_eq!((field.grid().dim(), field.m()), (1, 3));
}

#[test]
fn smooth_writes_field() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixture(dir.path(), "c", &["--name", "constant", "--grid", "8", "--m", "3"]);
    let out = path(dir.path(), "s.json");
    let o = bin(&["smooth", "--input", &f, "--epsilon-smooth", "0.2", "--output", &out]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(read_field(&out).unwrap().data(), read_field(&f).unwrap().data());
}

#[test]
fn pipeline_report_is_sorted_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixture(dir.path(), "loring", &["--name", "loring_k", "--grid", "48"]);
    let run = |tag: &str| {
        let report = path(dir.path(), &format!("report{tag}.json"));
        let q = path(dir.path(), &format!("q{tag}.json"));
        let o = bin(&[
            "pipeline", "--input", &f, "--target-eps", "0.3", "--check-chern", "--no-timestamp",
            "--report", &report, "--output", &q,
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read_to_string(report).unwrap()
    };
    let a = run("a");
    assert_eq!(a, run("b"));
    let v: Value = serde_json::from_str(&a).unwrap();
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    assert!(v.get("generated_unix").is_none());
    assert_eq!(v["chern_ok"], true);
    // object key order in the file itself
    let pos = |k: &str| a.find(&format!("\"{k}\"")).unwrap();
    assert!(pos("attempts") < pos("bound_ok") && pos("bound_ok") < pos("twodelta_ok"));
}

#[test]
fn pipeline_certification_failure_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixture(dir.path(), "loring", &["--name", "loring_k", "--grid", "32"]);
    let o = bin(&[
        "pipeline", "--input", &f, "--target-eps", "0.5", "--delta", "0.02", "--epsilon-smooth",
        "0.24", "--max-retries", "1", "--report", &path(dir.path(), "r.json"), "--output",
        &path(dir.path(), "q.json"),
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn io_and_validation_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = path(dir.path(), "missing.json");
    assert_eq!(bin(&["lipschitz", "--input", &missing]).status.code(), Some(2));

    let bad = path(dir.path(), "bad.json");
    std::fs::write(&bad, "{\"version\": 9}").unwrap();
    assert_eq!(bin(&["chern", "--input", &bad]).status.code(), Some(2));

    let f = fixture(dir.path(), "c", &["--name", "constant", "--grid", "8"]);
    let o = bin(&["smooth", "--input", &f, "--epsilon-smooth", "0.7", "--output", &bad]);
    assert_eq!(o.status.code(), Some(2));
    let o = bin(&["contour", "--input", &f, "--delta", "0.1", "--s", "2", "--index", "64"]);
    assert_eq!(o.status.code(), Some(2));
    let o = bin(&["fixture", "--name", "loring_k", "--grid", "1", "--output", &bad]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn contour_matches_eigen() {
    let dir = tempfile::tempdir().unwrap();
    let f = fixture(
        dir.path(),
        "r",
        &["--name", "random", "--grid", "10", "--m", "4", "--seed", "3", "--delta", "0.2"],
    );
    let o = bin(&["contour", "--input", &f, "--delta", "0.2", "--s", "4", "--index", "17"]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert!(v["distance_to_eigen"].as_f64().unwrap() <= 1e-6);
    assert_eq!(v["projection"].as_array().unwrap().len(), 4);
}

#[test]
fn verify_kernel_scope_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let json = path(dir.path(), "v.json");
    let o = bin(&["verify", "--scope", "kernel", "--json", &json]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).lines().all(|l| l.starts_with("PASS")));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(bin(&["verify", "--scope", "nonsense"]).status.code(), Some(2));
}
