use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn sortition(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sortition"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_single_issue_then_eval() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("p.txt");
    let out = sortition(&["--seed", "3", "gen", "single-issue", "--n", "10", "--n1", "1", "--out", path_str(&file)]);
    let doc = json_of(&out);
    assert_eq!(doc["result"]["n"], 10);
    assert_eq!(doc["result"]["m"], 1);
    assert_eq!(doc["config"]["seed"], 3);

    let out = sortition(&["--seed", "3", "eval", "--profile", path_str(&file), "--rule", "kmaj", "--k", "1"]);
    let doc = json_of(&out);
    assert!((doc["result"]["ratio"]["value"].as_f64().unwrap() - 1.8).abs() < 1e-12);
    assert_eq!(doc["result"]["method"], "exact-hypergeometric");
    assert_eq!(doc["config"]["command"], "eval");
    assert_eq!(doc["config"]["rule"], "kmaj");
}

#[test]
fn gen_equidistant_reports_common_distance() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("e.txt");
    let doc = json_of(&sortition(&["gen", "equidistant", "--n", "5", "--n1", "2", "--out", path_str(&file)]));
    assert_eq!(doc["result"]["m"], 120);
    assert_eq!(doc["result"]["generator"]["common_distance"], 72);
    assert_eq!(doc["result"]["support_histogram"][0]["support"], 2);
    assert_eq!(doc["result"]["support_histogram"][0]["count"], 120);
}

#[test]
fn gen_two_cluster_reports_concentration() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("t.txt");
    let doc = json_of(&sortition(&[
        "--seed", "7", "gen", "two-cluster", "--n", "40", "--m", "20000", "--p", "0.05", "--q", "0.04", "--alpha",
        "0.75", "--eps", "0.1", "--out", path_str(&file),
    ]));
    let g = &doc["result"]["generator"];
    assert_eq!(g["cluster_p"], 30);
    assert!(g["concentration"]["max_relative_deviation"].as_f64().unwrap() <= 0.1);
    assert!(g["concentration"]["min_pp_distance"].as_u64().unwrap() > g["concentration"]["max_pq_distance"].as_u64().unwrap());
}

#[test]
fn krep_on_unanimous_profile_has_ratio_one() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("u.txt");
    std::fs::write(&file, "4,2\n1,0\n1,0\n1,0\n1,0\n").unwrap();
    let doc = json_of(&sortition(&["eval", "--profile", path_str(&file), "--rule", "krep", "--k", "2"]));
    assert_eq!(doc["result"]["ratio"]["value"], 1.0);
    assert_eq!(doc["result"]["method"], "exact-enumeration");
}

#[test]
fn mc_replays_identically() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("i.txt");
    json_of(&sortition(&["--seed", "5", "gen", "iid", "--n", "30", "--m", "4", "--p", "0.3", "--out", path_str(&file)]));
    let args = ["--seed", "11", "mc", "--profile", path_str(&file), "--rule", "krep", "--k", "3", "--samples", "3000"];
    let a = sortition(&args);
    let b = sortition(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let doc = json_of(&a);
    assert_eq!(doc["result"]["estimate"]["seed"], 11);

    let a = sortition(&["--seed", "2", "--threads", "1", "eval", "--profile", path_str(&file), "--rule", "kmaj", "--k", "3", "--method", "mc", "--samples", "5000"]);
    let b = sortition(&["--seed", "2", "--threads", "2", "eval", "--profile", path_str(&file), "--rule", "kmaj", "--k", "3", "--method", "mc", "--samples", "5000"]);
    assert_eq!(json_of(&a)["result"], json_of(&b)["result"]);
}

#[test]
fn auto_falls_back_to_monte_carlo_above_the_cap() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("big.txt");
    let caps = dir.path().join("caps.toml");
    std::fs::write(&caps, "enumeration_cap = 10\n").unwrap();
    json_of(&sortition(&["--seed", "1", "gen", "iid", "--n", "12", "--m", "3", "--p", "0.4", "--out", path_str(&file)]));
    let base = ["--seed", "1", "--caps-config", path_str(&caps), "eval", "--profile", path_str(&file), "--rule", "krep", "--k", "3"];
    let doc = json_of(&sortition(&[&base[..], &["--samples", "2000"]].concat()));
    assert_eq!(doc["result"]["method"], "monte-carlo");
    assert_eq!(doc["config"]["caps"]["enumeration_cap"], 10);

    let forced = sortition(&[&base[..], &["--method", "enum"]].concat());
    assert_eq!(forced.status.code(), Some(3));
}

#[test]
fn ar_search_rows() {
    let doc = json_of(&sortition(&["ar-search", "--n", "30000", "--k", "3,7"]));
    let rows = doc["result"].as_array().unwrap();
    assert!((rows[0]["exact_ar"].as_f64().unwrap() - 1.316).abs() < 1e-3);
    assert!(rows.iter().all(|r| r["upper_satisfied"] == true));

    let csv = sortition(&["--format", "csv", "ar-search", "--n", "9", "--k", "9,1"]);
    let text = String::from_utf8(csv.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("n,k,exact_ar"));
    assert!(lines[1].starts_with("9,9,1,0,"));
    assert!(lines[2].starts_with("9,1,"));
}

#[test]
fn bounds_table_values() {
    let doc = json_of(&sortition(&["bounds", "--k", "9,2,10", "--m", "1"]));
    let rows = doc["result"]["rows"].as_array().unwrap();
    assert!((rows[0]["kmaj_upper"].as_f64().unwrap() - 2.2131).abs() < 1e-4);
    assert_eq!(rows[1]["krep_one_issue"], 1.125);
    assert!((rows[2]["krep_iid_upper"].as_f64().unwrap() - (1.0 + (-5f64).exp())).abs() < 1e-15);
}

#[test]
fn optimality_check_passes() {
    let out = sortition(&["optimality-check", "--n-max", "30", "--k-max", "9"]);
    let doc = json_of(&out);
    assert_eq!(doc["result"]["deviations"].as_array().unwrap().len(), 0);
    assert!(String::from_utf8_lossy(&out.stderr).contains("0 deviations"));
}

#[test]
fn regret_scan_extremes() {
    let doc = json_of(&sortition(&["regret-scan", "--n", "200", "--c", "1e9", "--k-max", "99", "--k-step", "2"]));
    assert_eq!(doc["result"]["scans"][0]["best_k"], 1);
    let doc = json_of(&sortition(&["regret-scan", "--n", "200", "--c", "1e-12", "--k-max", "99", "--k-step", "2"]));
    assert_eq!(doc["result"]["scans"][0]["best_k"], 99);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("p.txt");
    std::fs::write(&file, "3,1\n1\n0\n1\n").unwrap();
    let bad_rule = sortition(&["eval", "--profile", path_str(&file), "--rule", "kmaj", "--k", "4"]);
    assert_eq!(bad_rule.status.code(), Some(1));
    let missing_k = sortition(&["eval", "--profile", path_str(&file), "--rule", "krep"]);
    assert_eq!(missing_k.status.code(), Some(1));
    assert_eq!(sortition(&["frobnicate"]).status.code(), Some(2));
    let missing = sortition(&["eval", "--profile", "/nonexistent/p.txt", "--rule", "rd"]);
    assert_eq!(missing.status.code(), Some(5));

    let malformed = dir.path().join("bad.txt");
    std::fs::write(&malformed, "2,2\n1,0\n1,x\n").unwrap();
    let out = sortition(&["eval", "--profile", path_str(&malformed), "--rule", "rd"]);
    assert_eq!(out.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 2"));

    let impossible = sortition(&[
        "--seed", "1", "gen", "two-cluster", "--n", "10", "--m", "20", "--p", "0.3", "--q", "0.2", "--alpha", "0.75",
        "--eps", "0.01", "--max-attempts", "3", "--out", path_str(&dir.path().join("x.txt")),
    ]);
    assert_eq!(impossible.status.code(), Some(4));

    let exact_krep = sortition(&["eval", "--profile", path_str(&file), "--rule", "krep", "--k", "2", "--method", "exact"]);
    assert_eq!(exact_krep.status.code(), Some(1));
}
