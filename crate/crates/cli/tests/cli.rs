use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn kirchhoff(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kirchhoff"))
        .args(args)
        .env("KIRCHHOFF_LOG", "quiet")
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("bad stdout ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    assert_eq!(text.trim_end().lines().count(), 1, "diagnostic must be one line: {text}");
    serde_json::from_str(text.trim_end()).unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("cfg.json");
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn sublinear_config(dir: &Path, extra_output: &str) -> String {
    write_config(
        dir,
        &format!(
            r#"{{
  "domain": {{"a": 0, "b": 3.141592653589793, "n": 201}},
  "M": {{"family": "power_shift", "a": 1, "b": 1, "c": 0, "p": 1}},
  "model": {{"kind": "sublinear", "lambda": 2, "q": 0.5}},
  "solver": {{"scheme": "picard"}},
  "output": {{{extra_output}}}
}}"#
        ),
    )
}

#[test]
fn eigen_matches_continuum_value() {
    let out = kirchhoff(&["eigen", "--a", "0", "--b", "3.14159265358979", "--n", "2001"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    let l = v["lambda1"].as_f64().unwrap();
    assert!((l - 1.0).abs() < 1e-5, "{l}");
    assert_eq!(v["n"], 2001);
}

#[test]
fn torsion_sup() {
    let out = kirchhoff(&["torsion", "--n", "401"]);
    assert_eq!(out.status.code(), Some(0));
    let s = stdout_json(&out)["sup_e"].as_f64().unwrap();
    assert!((s - std::f64::consts::PI.powi(2) / 8.0).abs() < 1e-12);
}

#[test]
fn counterexample_verify_accepts_known_witness() {
    let out = kirchhoff(&["counterexample", "verify", "--a", "1", "--b", "10000", "--c", "0", "--p", "3", "--rho", "0.405"]);
    assert_eq!(out.status.code(), Some(0));
    let w = stdout_json(&out);
    assert_eq!(w["valid"], true);
    assert!(w["condi_margin"].as_f64().unwrap() > 0.0);
    assert!(w["order_violation_gap"].as_f64().unwrap() > 0.0);
}

#[test]
fn counterexample_verify_rejects_classical_case() {
    let out = kirchhoff(&["counterexample", "verify", "--a", "1", "--b", "1", "--c", "0", "--p", "1", "--rho", "0.3"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout_json(&out)["valid"], false);
}

#[test]
fn counterexample_search_case2() {
    let out = kirchhoff(&["counterexample", "search", "--case", "2", "--a", "1", "--c", "1", "--rho", "0.1", "--p-max", "3"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["valid"], true);
}

#[test]
fn negative_lambda_is_invalid_input() {
    let out = kirchhoff(&["solve", "--model", "sublinear", "--lambda", "-1", "--q", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    let d = stderr_json(&out);
    assert_eq!(d["error"], "no_positive_solution");
    assert_eq!(d["exit_code"], 2);
}

#[test]
fn usage_errors_are_json() {
    let out = kirchhoff(&["solve", "--model", "sublinear"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "usage");
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"domain": {"a": 0, "b": 3.14, "n": 101},
            "M": {"family": "constant", "m": 1},
            "model": {"kind": "sublinear", "lambda": 1, "q": 0.5, "typo": 1}}"#,
    );
    let out = kirchhoff(&["solve", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let d = stderr_json(&out);
    assert_eq!(d["error"], "config");
    let msg = d["message"].as_str().unwrap();
    assert!(msg.contains("model") && msg.contains("typo"), "{msg}");
}

#[test]
fn solve_writes_csv_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = sublinear_config(dir.path(), "");
    let csv = dir.path().join("sol.csv");
    let out = kirchhoff(&["solve", "--config", &cfg, "--out", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert_eq!(v["report"]["converged"], true);
    assert_eq!(v["pair"]["ok"], true);
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,value"));
    let rows: Vec<(f64, f64)> = lines
        .map(|l| {
            let (x, u) = l.split_once(',').unwrap();
            (x.parse().unwrap(), u.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 201);
    assert_eq!(rows[0].1, 0.0);
    assert_eq!(rows[200].1, 0.0);
    assert!(rows[1..200].iter().all(|&(_, u)| u > 0.0));
}

#[test]
fn json_output_format() {
    let dir = tempfile::tempdir().unwrap();
    let sol = dir.path().join("sol.json");
    let cfg = sublinear_config(dir.path(), &format!(r#""path": {:?}, "format": "json""#, sol.to_str().unwrap()));
    let out = kirchhoff(&["solve", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&fs::read_to_string(&sol).unwrap()).unwrap();
    assert_eq!(v["x"].as_array().unwrap().len(), 201);
    assert_eq!(v["value"].as_array().unwrap().len(), 201);
}

#[test]
fn identical_config_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = sublinear_config(dir.path(), "");
    let a = kirchhoff(&["solve", "--config", &cfg]);
    let b = kirchhoff(&["solve", "--config", &cfg]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn verify_pair_reports_margins() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = sublinear_config(dir.path(), "");
    let out = kirchhoff(&["verify-pair", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    for key in ["ok", "mu_min", "mu_max", "s_min", "s_max", "worst_super_margin", "worst_sub_margin", "worst_nodes"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert!(v["mu_min"].as_f64().unwrap() <= v["mu_max"].as_f64().unwrap());
}

#[test]
fn explicit_pair_that_fails_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let n = 101;
    let write = |name: &str, scale: f64| {
        let p = dir.path().join(name);
        let mut s = String::from("x,value\n");
        for i in 0..n {
            let x = std::f64::consts::PI * i as f64 / (n - 1) as f64;
            s.push_str(&format!("{:.17e},{:.17e}\n", x, scale * x.sin()));
        }
        fs::write(&p, s).unwrap();
        p
    };
    // both ends far below the solution: the upper one cannot be a supersolution
    let lower = write("lower.csv", 1e-3);
    let upper = write("upper.csv", 2e-3);
    let cfg = write_config(
        dir.path(),
        &format!(
            r#"{{"domain": {{"a": 0, "b": 3.141592653589793, "n": {n}}},
                "M": {{"family": "constant", "m": 1}},
                "model": {{"kind": "sublinear", "lambda": 2, "q": 0.5}},
                "pair": {{"lower": {:?}, "upper": {:?}}}}}"#,
            lower.to_str().unwrap(),
            upper.to_str().unwrap()
        ),
    );
    let out = kirchhoff(&["verify-pair", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout_json(&out)["ok"], false);
}

#[test]
fn classify_constant() {
    let out = kirchhoff(&["classify-m", "--m-family", "constant", "--m-value", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["classification"]["m0"].as_f64(), Some(2.0));
}
