use std::process::{Command, Output};

use boolrg::detector::DecompositionReport;
use boolrg::flow::{ClassificationReport, FlowTrace, PhaseLabel};

fn boolrg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_boolrg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn ok(args: &[&str]) -> String {
    let o = boolrg(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    stdout(&o)
}

#[test]
fn parity_flow() {
    let trace = FlowTrace::read_csv(ok(&["flow", "--family", "parity", "--n", "12", "--steps", "3", "--seed", "0"]).as_bytes()).unwrap();
    assert_eq!(trace.densities(), vec![0.5, 1.0, 0.0, 0.0]);
}

#[test]
fn random_flow_tracks_analytic_column() {
    let text = ok(&["flow", "--family", "random", "--p0", "0.25", "--n", "18", "--steps", "6", "--seed", "7"]);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().ends_with(",analytic_density"));
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        let rows: f64 = f[4].parse().unwrap();
        let emp = f[3].parse::<f64>().unwrap() / rows;
        let ana: f64 = f[5].parse().unwrap();
        let band = 4.0 * (ana * (1.0 - ana) / rows).sqrt();
        assert!((emp - ana).abs() <= band, "{line}");
    }
}

#[test]
fn file_flow_with_explicit_order() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.bfrg");
    let path = path.to_str().unwrap();
    ok(&["gen", "--family", "random", "--n", "6", "--seed", "3", "--out", path]);
    let trace = FlowTrace::read_csv(ok(&["flow", "--file", path, "--steps", "2", "--order", "3,1"]).as_bytes()).unwrap();
    let labels: Vec<_> = trace.steps.iter().map(|s| s.decimated).collect();
    use boolrg::flow::Decimated::*;
    assert_eq!(labels, vec![Start, Variable(3), Variable(1)]);
}

#[test]
fn all_orders_policy() {
    let text = ok(&["flow", "--family", "majority", "--n", "5", "--steps", "2", "--order-policy", "all", "--seed", "0"]);
    assert!(text.starts_with("order,step,"));
    // 20 orders of three rows each plus the header
    assert_eq!(text.lines().count(), 1 + 20 * 3);
}

fn classify(args: &[&str]) -> ClassificationReport {
    let mut full = vec!["classify"];
    full.extend_from_slice(args);
    ClassificationReport::from_json(&ok(&full)).unwrap()
}

#[test]
fn classify_examples() {
    let r = classify(&["--family", "mod_p", "--p", "3", "--n", "1000", "--seed", "0"]);
    assert_eq!(r.label, PhaseLabel::CompositeSuspect);
    let r = classify(&["--family", "poly", "--xi", "3", "--n", "12", "--seed", "1"]);
    assert_eq!((r.label, r.xi), (PhaseLabel::Annihilated, Some(3)));
    let r = classify(&["--family", "random", "--p0", "0.5", "--n", "16", "--seed", "2"]);
    assert_eq!(r.label, PhaseLabel::Generic);
}

fn detect(args: &[&str]) -> (Option<i32>, String) {
    let mut full = vec!["detect"];
    full.extend_from_slice(args);
    let o = boolrg(&full);
    (o.status.code(), stdout(&o))
}

#[test]
fn detect_recovers_plant() {
    let (code, text) = detect(&["--family", "planted", "--n", "4", "--xi", "1", "--method", "exhaustive", "--seed", "11"]);
    assert_eq!(code, Some(0));
    let r = DecompositionReport::from_json(&text).unwrap();
    assert_eq!((r.remainder_num, r.remainder_den), (1, 16));
    let plant = boolrg::families::planted_with_flips(4, 1, 1, 11).unwrap();
    assert_eq!(r.witness_anf().unwrap(), plant.polynomial);
}

#[test]
fn detect_exit_code_follows_bound() {
    let (code, text) = detect(&["--family", "random", "--n", "12", "--xi", "3", "--method", "sieve", "--seed", "5"]);
    let r = DecompositionReport::from_json(&text).unwrap();
    assert_eq!(code, Some(if r.meets_bound { 0 } else { 3 }));

    let (code, text) = detect(&["--family", "random", "--n", "8", "--xi", "2", "--method", "truncate", "--C", "0.01", "--seed", "5"]);
    assert_eq!(code, Some(3));
    assert!(!DecompositionReport::from_json(&text).unwrap().meets_bound);
}

#[test]
fn detect_capacity_exit() {
    let o = boolrg(&["detect", "--family", "random", "--n", "20", "--xi", "3", "--method", "exhaustive", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("1351"));
}

#[test]
fn seeds_are_reproducible() {
    let args = ["flow", "--family", "random", "--n", "10", "--steps", "4", "--order-policy", "random", "--seed", "42"];
    assert_eq!(ok(&args), ok(&args));

    let o = boolrg(&["gen", "--family", "random", "--n", "8"]);
    let stderr = String::from_utf8(o.stderr).unwrap();
    let seed = stderr.trim().strip_prefix("seed: ").expect("seed is printed");
    let again = boolrg(&["gen", "--family", "random", "--n", "8", "--seed", seed]);
    assert_eq!(o.stdout, again.stdout);
}

#[test]
fn count_outputs() {
    let text = ok(&["count", "--sqrt-sweep", "64,256,1024", "--seed", "0"]);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "n,xi,C,alpha,log2F,log2M,margin");
    let margins: Vec<String> = lines.map(|l| l.rsplit(',').next().unwrap().to_owned()).collect();
    assert_eq!(margins.len(), 3);
    assert!(margins.iter().all(|m| m.starts_with('-')));

    let v: serde_json::Value = serde_json::from_str(&ok(&["count", "--n", "1024", "--naive", "1024", "--json", "--seed", "0"])).unwrap();
    assert_eq!(v["exponent"], 1.0);
    assert_eq!(v["exceeds"], false);
}

#[test]
fn sym_flow_reports_cycle() {
    let v: serde_json::Value =
        serde_json::from_str(&ok(&["sym-flow", "--family", "mod_p", "--n", "999", "--steps", "12", "--json", "--seed", "0"])).unwrap();
    assert_eq!(v["cycle"]["period"], 3);
}

#[test]
fn wide_symmetric_flow_uses_symmetric_engine() {
    let trace = FlowTrace::read_csv(ok(&["flow", "--family", "parity", "--n", "500", "--steps", "2", "--seed", "0"]).as_bytes()).unwrap();
    assert_eq!(trace.densities(), vec![0.5, 1.0, 0.0]);
    assert!(!boolrg(&["flow", "--family", "random", "--n", "40", "--seed", "0"]).status.success());
}

#[test]
fn bad_inputs_fail() {
    assert!(!boolrg(&["flow", "--family", "nonsense", "--n", "4"]).status.success());
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.bfrg");
    std::fs::write(&bad, b"not a table").unwrap();
    let o = boolrg(&["flow", "--file", bad.to_str().unwrap(), "--seed", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!boolrg(&["flow", "--family", "parity", "--n", "4", "--steps", "5", "--seed", "0"]).status.success());
    assert!(!boolrg(&["flow", "--family", "mod_p", "--p", "4", "--n", "8", "--seed", "0"]).status.success());
}
