use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;
use tiltsense::estimands::{CompleteDataModel, Estimand};
use tiltsense::observed::json;
use tiltsense::selection::SelectionSpec;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_tilt-sense"));
    c.env_remove("TILT_SENSE_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn error_json(out: &Output) -> Value {
    serde_json::from_slice(out.stderr.trim_ascii()).expect("stderr is one JSON object")
}

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        Self { dir: tempfile::tempdir().unwrap() }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn s(&self, name: &str) -> String {
        self.path(name).to_str().unwrap().to_string()
    }
}

fn simulate_and_fit(w: &Workspace, dgp: &str, n: &str, model: &str, boot: &str) {
    ok(&["simulate", "--dgp", dgp, "--n", n, "--seed", "3", "--out", &w.s("data.csv")]);
    ok(&[
        "fit",
        "--in",
        &w.s("data.csv"),
        "--model",
        model,
        "--boot",
        boot,
        "--seed",
        "1",
        "--workers",
        "1",
        "--out",
        &w.s("fit.json"),
    ]);
}

#[test]
fn sweep_needs_only_the_fit() {
    let w = Workspace::new();
    simulate_and_fit(&w, "example1", "800", "em:2", "10");
    std::fs::remove_file(w.path("data.csv")).unwrap();
    ok(&["sweep", "--fit", &w.s("fit.json"), "--grid", "g0=0;g1=0", "--estimand", "ate", "--out", &w.s("origin.csv")]);
    let fit = json::read_path(w.path("fit.json")).unwrap();
    let naive = CompleteDataModel::new(&fit, SelectionSpec::null()).point(Estimand::Ate).unwrap();
    let mut rdr = csv::Reader::from_path(w.path("origin.csv")).unwrap();
    let row = rdr.records().next().unwrap().unwrap();
    let headers = rdr.headers().unwrap().clone();
    let col = headers.iter().position(|h| h == "estimate").unwrap();
    assert_eq!(row[col].parse::<f64>().unwrap(), naive);
}

#[test]
fn worker_count_does_not_change_outputs() {
    let w = Workspace::new();
    simulate_and_fit(&w, "example1", "600", "em:2", "8");
    ok(&[
        "fit",
        "--in",
        &w.s("data.csv"),
        "--model",
        "em:2",
        "--boot",
        "8",
        "--seed",
        "1",
        "--workers",
        "4",
        "--out",
        &w.s("fit4.json"),
    ]);
    assert_eq!(std::fs::read(w.path("fit.json")).unwrap(), std::fs::read(w.path("fit4.json")).unwrap());
    let grid = "g0=-0.2:0.2:5;g1=-0.2:0.2:5";
    for (workers, out) in [("1", "a.csv"), ("4", "b.csv")] {
        ok(&[
            "sweep",
            "--fit",
            &w.s("fit.json"),
            "--grid",
            grid,
            "--estimand",
            "ate,qte",
            "--workers",
            workers,
            "--out",
            &w.s(out),
        ]);
    }
    let env = bin()
        .args(["sweep", "--fit", &w.s("fit.json"), "--grid", grid, "--estimand", "ate,qte", "--out", &w.s("c.csv")])
        .env("TILT_SENSE_THREADS", "3")
        .output()
        .unwrap();
    assert!(env.status.success());
    let a = std::fs::read(w.path("a.csv")).unwrap();
    assert_eq!(a, std::fs::read(w.path("b.csv")).unwrap());
    assert_eq!(a, std::fs::read(w.path("c.csv")).unwrap());
}

#[test]
fn malformed_grid_is_a_usage_error() {
    let w = Workspace::new();
    simulate_and_fit(&w, "example1", "200", "em:1", "0");
    for grid in ["g0=1:2", "g9=0", "g0=0:1:0", "", "g0=0;g0=1", "g0=inf"] {
        let out = run(&["sweep", "--fit", &w.s("fit.json"), "--grid", grid, "--out", &w.s("t.csv")]);
        assert_eq!(out.status.code(), Some(2), "grid '{grid}'");
        assert_eq!(error_json(&out)["field"], "grid", "grid '{grid}'");
    }
}

#[test]
fn exit_codes_by_error_class() {
    let w = Workspace::new();
    let missing = run(&["sweep", "--fit", &w.s("none.json"), "--grid", "g0=0", "--out", &w.s("t.csv")]);
    assert_eq!(missing.status.code(), Some(3));
    assert_eq!(error_json(&missing)["error"], "IO_ERROR");

    std::fs::write(w.path("bad.json"), r#"{"prevalence": {"n0": 1, "n1": 1}, "arms": []}"#).unwrap();
    let bad = run(&["ingest", "--in", &w.s("bad.json"), "--out", &w.s("fit.json")]);
    assert_eq!(bad.status.code(), Some(3));
    assert_eq!(error_json(&bad)["error"], "SCHEMA_VIOLATION");

    let unknown = run(&["frobnicate"]);
    assert_eq!(unknown.status.code(), Some(2));
    assert_eq!(error_json(&unknown)["error"], "USAGE");

    let threads = bin()
        .args(["sweep", "--fit", "x", "--grid", "g0=0", "--out", "y"])
        .env("TILT_SENSE_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(threads.status.code(), Some(2));

    simulate_and_fit(&w, "example1", "200", "em:1", "0");
    let q = run(&[
        "sweep",
        "--fit",
        &w.s("fit.json"),
        "--grid",
        "g0=0",
        "--estimand",
        "qte",
        "--q",
        "1.2",
        "--out",
        &w.s("t.csv"),
    ]);
    assert_eq!(q.status.code(), Some(2));
    assert_eq!(error_json(&q)["error"], "Q_OUT_OF_RANGE");

    let same = run(&["sweep", "--fit", &w.s("fit.json"), "--grid", "g0=0", "--out", &w.s("fit.json")]);
    assert_eq!(same.status.code(), Some(2));
}

#[test]
fn ingest_round_trips() {
    let w = Workspace::new();
    simulate_and_fit(&w, "example1", "300", "em:2", "3");
    ok(&["ingest", "--in", &w.s("fit.json"), "--out", &w.s("again.json")]);
    assert_eq!(std::fs::read(w.path("fit.json")).unwrap(), std::fs::read(w.path("again.json")).unwrap());
}

#[test]
fn calibrate_reports_benchmarks() {
    let w = Workspace::new();
    simulate_and_fit(&w, "binary-normal", "2000", "linear", "0");
    ok(&[
        "calibrate",
        "--data",
        &w.s("data.csv"),
        "--fit",
        &w.s("fit.json"),
        "--covars",
        "x",
        "--rho-star",
        "0.01,0.05",
        "--out",
        &w.s("calib.json"),
    ]);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(w.path("calib.json")).unwrap()).unwrap();
    assert_eq!(v["benchmarks"][0]["covariate"], "x");
    assert_eq!(v["mapping"].as_array().unwrap().len(), 2);
    let bad = run(&[
        "calibrate",
        "--data",
        &w.s("data.csv"),
        "--fit",
        &w.s("fit.json"),
        "--covars",
        "x",
        "--rho-star",
        "1.5",
        "--out",
        &w.s("c2.json"),
    ]);
    assert_eq!(bad.status.code(), Some(2));
    assert_eq!(error_json(&bad)["error"], "RHO_OUT_OF_RANGE");
}

#[test]
fn latent_class_bounds_and_sweep() {
    let w = Workspace::new();
    simulate_and_fit(&w, "latent-class", "600", "latent-class", "5");
    ok(&["bounds", "--fit", &w.s("fit.json"), "--estimand", "ate,qte", "--q", "0.5", "--out", &w.s("bounds.csv")]);
    let mut rdr = csv::Reader::from_path(w.path("bounds.csv")).unwrap();
    let rows: Vec<_> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 2);
    let (lo, hi): (f64, f64) = (rows[0][2].parse().unwrap(), rows[0][5].parse().unwrap());
    assert!(lo <= hi);
    ok(&[
        "sweep",
        "--fit",
        &w.s("fit.json"),
        "--selection",
        "latent-class",
        "--grid",
        "o0=-inf;o1=1",
        "--out",
        &w.s("lc.csv"),
    ]);
    let text = std::fs::read_to_string(w.path("lc.csv")).unwrap();
    assert!(text.starts_with("omega0,omega1,estimand"), "{text}");
    assert!(text.lines().nth(1).unwrap().starts_with("-inf,1,"), "{text}");
    let gamma = run(&[
        "sweep",
        "--fit",
        &w.s("fit.json"),
        "--selection",
        "latent-class",
        "--grid",
        "g0=0",
        "--out",
        &w.s("x.csv"),
    ]);
    assert_eq!(gamma.status.code(), Some(2));
}

#[test]
fn check_reports_diagnostics() {
    let w = Workspace::new();
    simulate_and_fit(&w, "example1", "400", "em:2", "0");
    let out = ok(&["check", "--fit", &w.s("fit.json"), "--point", "g0=0.3,g1=-0.2"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    for arm in v["arms"].as_array().unwrap() {
        assert_eq!(arm["proper"], true);
        assert!(arm["max_constraint_residual"].as_f64().unwrap() <= 1e-8);
        assert!(arm["min_ess_ratio"].as_f64().unwrap() > 0.0);
    }
    assert_eq!(v["point"]["gamma0"], 0.3);
}

#[test]
fn simulate_writes_truth() {
    let w = Workspace::new();
    ok(&["simulate", "--dgp", "zero-inflated", "--n", "100", "--out", &w.s("d.csv"), "--truth", &w.s("truth.json")]);
    let v: Value = serde_json::from_str(&std::fs::read_to_string(w.path("truth.json")).unwrap()).unwrap();
    assert_eq!(v["y0"].as_array().unwrap().len(), 100);
    let bad = run(&["simulate", "--dgp", "nope", "--n", "10", "--out", &w.s("x.csv")]);
    assert_eq!(bad.status.code(), Some(2));
    assert_eq!(error_json(&bad)["field"], "dgp");
    assert!(!Path::new(&w.s("x.csv")).exists());
}
