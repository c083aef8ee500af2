use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_sde-lasso"));
    c.env_remove("SDE_LASSO_WORKERS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn rates() -> Option<PathBuf> {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/irates_1964_1989.csv");
    p.exists().then_some(p)
}

fn simulate_ou(dir: &Path, name: &str, n: &str) -> PathBuf {
    let out = dir.join(name);
    let o = run(&[
        "simulate", "--model", "ou", "--theta", "1,10,1", "--n", n, "--delta", "0.05", "--seed",
        "11", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    out
}

#[test]
fn simulate_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let a = std::fs::read(simulate_ou(dir.path(), "a.csv", "200")).unwrap();
    let b = std::fs::read(simulate_ou(dir.path(), "b.csv", "200")).unwrap();
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().next(), Some("t,x"));
    assert_eq!(text.lines().count(), 202);
}

#[test]
fn fit_writes_versioned_report() {
    let dir = TempDir::new().unwrap();
    let data = simulate_ou(dir.path(), "ou.csv", "2000");
    let report = dir.path().join("fit.json");
    let o = run(&[
        "fit", "--model", "ou", "--data", data.to_str().unwrap(), "--out", report.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&std::fs::read(report).unwrap()).unwrap();
    assert_eq!(v["schema_version"], "1");
    assert_eq!(v["converged"], true);
    assert_eq!(v["theta_tilde"].as_array().unwrap().len(), 3);
}

#[test]
fn select_and_reduce_on_rates() {
    let Some(data) = rates() else { return };
    let dir = TempDir::new().unwrap();
    let report = dir.path().join("select.json");
    let o = run(&[
        "select", "--model", "ckls", "--data", data.to_str().unwrap(), "--delta", "0.0833333333333333",
        "--lambda0", "10", "--gamma0", "10", "--out", report.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(v["selection"]["zero_set"], serde_json::json!([1]));
    let a = v["selection"]["theta_hat"][0].as_f64().unwrap();
    assert!((a - 0.5412).abs() / 0.5412 < 0.015, "alpha {a}");

    let o = run(&["reduce", "--result", report.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(String::from_utf8(o.stdout).unwrap().trim(), "CKLS (1992)");
}

#[test]
fn mild_selection_on_rates_keeps_every_coordinate() {
    let Some(data) = rates() else { return };
    let o = run(&["select", "--model", "ckls", "--data", data.to_str().unwrap(), "--delta", "0.0833333333333333"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["selection"]["zero_set"], serde_json::json!([]));
    let reference = [1.5435, -0.1687, 0.1306, 1.4452];
    for (j, want) in reference.iter().enumerate() {
        let got = v["selection"]["theta_hat"][j].as_f64().unwrap();
        assert!(((got - want) / want).abs() < 0.005, "{j}: {got} vs {want}");
    }
}

#[test]
fn too_few_observations_is_a_data_error() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("short.csv");
    std::fs::write(&data, "0.05\n0.06\n0.055\n").unwrap();
    let o = run(&["fit", "--model", "ckls", "--data", data.to_str().unwrap(), "--delta", "1"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn usage_errors() {
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
    assert_eq!(code(&run(&["fit", "--help"])), 0);
    let o = run(&["simulate", "--model", "nope", "--theta", "1", "--n", "5", "--delta", "0.1"]);
    assert_ne!(code(&o), 0);
    let o = run(&["simulate", "--model", "ou", "--theta", "1,10,1", "--n", "5", "--delta", "-0.1"]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
}

#[test]
fn missing_or_malformed_data() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("absent.csv");
    let o = run(&["fit", "--model", "ou", "--data", missing.to_str().unwrap(), "--delta", "1"]);
    assert_eq!(code(&o), 2);

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "x\n1.0\n2.0\nabc\n3.0\n").unwrap();
    let o = run(&["fit", "--model", "ou", "--data", bad.to_str().unwrap(), "--delta", "1"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));
}

#[test]
fn non_converged_fit_exits_3() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("fig1.csv");
    let o = run(&[
        "simulate", "--model", "fig1", "--theta", "1,10,0,4,0.5", "--n", "300", "--delta", "0.1",
        "--seed", "4", "--out", data.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    // a start outside the admissible region cannot be evaluated
    let o = run(&["fit", "--model", "fig1", "--data", data.to_str().unwrap(), "--init", "1,10,-100,4,0.5"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

fn write_config(dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
    let est = dir.join("est.csv");
    let kde = dir.join("kde.csv");
    let cfg = dir.join("mc.cfg");
    std::fs::write(
        &cfg,
        format!(
            "# small run\nmodel = ou\ntruth = 1, 10, 1\nn = 400\ndelta = 0.05\nreps = 8\n\
             master_seed = 5\nestimates = {}\nkde = {}\n",
            est.display(),
            kde.display()
        ),
    )
    .unwrap();
    (cfg, est, kde)
}

#[test]
fn mc_output_is_independent_of_workers() {
    let dir = TempDir::new().unwrap();
    let mut outputs = Vec::new();
    for workers in ["1", "3"] {
        let (cfg, est, kde) = write_config(dir.path());
        let o = bin()
            .args(["mc", "--config", cfg.to_str().unwrap()])
            .env("SDE_LASSO_WORKERS", workers)
            .output()
            .unwrap();
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        assert!(stderr(&o).contains("fraction_zero"));
        outputs.push((std::fs::read(est).unwrap(), std::fs::read(kde).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
    let est = String::from_utf8(outputs[0].0.clone()).unwrap();
    assert_eq!(est.lines().count(), 9);
}

#[test]
fn mc_rejects_unknown_keys() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("mc.cfg");
    std::fs::write(&cfg, "model = ou\ntruth = 1,10,1\nn = 50\ndelta = 0.1\nreps = 2\ncolour = red\n").unwrap();
    let o = run(&["mc", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 6"), "{}", stderr(&o));
}
