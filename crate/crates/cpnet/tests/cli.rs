use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cpnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpnet")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = cpnet(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_str().unwrap().to_string()
}

fn json(path: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn help_and_version_exit_zero() {
    for args in [&["--help"][..], &["fit", "--help"], &["--version"]] {
        let out = cpnet(args);
        assert_eq!(out.status.code(), Some(0), "{args:?}");
        assert!(!out.stdout.is_empty());
    }
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(cpnet(&["fit", "--bogus"]).status.code(), Some(1));
    assert_eq!(cpnet(&[]).status.code(), Some(1));
    assert_eq!(cpnet(&["bench", "--sizes", "20,10"]).status.code(), Some(1));
}

#[test]
fn data_errors_exit_two_and_name_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let edges = p(dir.path(), "edges.txt");
    fs::write(&edges, "0 1\n").unwrap();
    let missing = p(dir.path(), "nowhere.txt");
    let out = cpnet(&["-q", "fit", "--edges", &edges, "--coords", &missing, "--out", &p(dir.path(), "o")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere.txt"));

    let coords = p(dir.path(), "coords.txt");
    fs::write(&coords, "0 0\n1 oops\n").unwrap();
    let out = cpnet(&["-q", "fit", "--edges", &edges, "--coords", &coords, "--out", &p(dir.path(), "o")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("coords.txt:2"));
}

#[test]
fn synth_fit_validate_sample_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (coords, truth, edges) = (p(d, "coords.txt"), p(d, "truth.txt"), p(d, "edges.txt"));
    ok(&["-q", "--seed", "5", "synth", "--n", "500", "--out-coords", &coords, "--out-params", &truth, "--out-edges", &edges]);

    let (fitted, fit_report) = (p(d, "fit.txt"), p(d, "fit.json"));
    ok(&["-q", "fit", "--edges", &edges, "--coords", &coords, "--tol", "1e-8", "--out", &fitted, "--report", &fit_report]);
    let r = json(&fit_report);
    assert_eq!(r["n"], 500);
    assert_eq!(r["converged"], true);
    assert!(r["degree_residual"].as_f64().unwrap() < 1e-4);
    assert!(r["wall_seconds"].is_number());
    let eps = r["epsilon"].as_f64().unwrap();
    assert!((eps - 1.0).abs() < 0.3, "{eps}");

    let (val, degs) = (p(d, "val.json"), p(d, "deg.tsv"));
    ok(&["-q", "validate", "--edges", &edges, "--coords", &coords, "--params", &fitted, "--report", &val, "--degrees", &degs]);
    let v = json(&val);
    assert!(v["degree_max_abs"].as_f64().unwrap() < 1e-4);
    assert!(v["logdist_rel_error"].as_f64().unwrap() < 1e-3);
    assert_eq!(fs::read_to_string(&degs).unwrap().lines().count(), 501);

    let sampled = p(d, "sampled.txt");
    ok(&["-q", "--seed", "9", "sample", "--params", &fitted, "--coords", &coords, "--out", &sampled]);
    let val2 = p(d, "val2.json");
    ok(&["-q", "validate", "--edges", &sampled, "--coords", &coords, "--params", &fitted, "--report", &val2]);
    let v2 = json(&val2);
    let (m, e) = (v2["model_edges"].as_f64().unwrap(), v2["network_edges"].as_f64().unwrap());
    assert!((e - m).abs() < 4.0 * m.sqrt(), "{e} vs {m}");
    let (gm, gn) = (v2["model_gmel"].as_f64().unwrap(), v2["network_gmel"].as_f64().unwrap());
    assert!((gm.ln() - gn.ln()).abs() < 0.1 * gm.ln().abs().max(1.0), "{gm} vs {gn}");

    let feats = p(d, "feats.json");
    ok(&["-q", "features", &fitted, "--json", "--out", &feats]);
    assert!(json(&feats).is_array() || json(&feats).is_object());
}

fn deterministic_run(dir: &Path, threads: &str) -> Vec<Vec<u8>> {
    let (coords, truth, edges) = (p(dir, "c.txt"), p(dir, "t.txt"), p(dir, "e.txt"));
    let common = ["-q", "--deterministic", "--threads", threads];
    let with = |rest: &[&str]| -> Vec<String> { common.iter().chain(rest).map(|s| s.to_string()).collect() };
    let run = |rest: &[&str]| {
        let args = with(rest);
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        ok(&refs);
    };
    run(&["synth", "--n", "400", "--out-coords", &coords, "--out-params", &truth, "--out-edges", &edges]);
    let (fitted, report, sampled) = (p(dir, "f.txt"), p(dir, "r.json"), p(dir, "s.txt"));
    run(&["fit", "--edges", &edges, "--coords", &coords, "--path", "fast", "--out", &fitted, "--report", &report]);
    run(&["sample", "--params", &fitted, "--coords", &coords, "--out", &sampled]);
    [coords, truth, edges, fitted, report, sampled].iter().map(|f| fs::read(f).unwrap()).collect()
}

#[test]
fn deterministic_outputs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    let first = deterministic_run(a.path(), "1");
    assert_eq!(first, deterministic_run(b.path(), "1"));
    assert_eq!(first, deterministic_run(c.path(), "2"));
    let report: Value = serde_json::from_slice(&first[4]).unwrap();
    assert!(report.get("wall_seconds").is_none());
    assert_eq!(report["seed"], 0);
}
