use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn etdiv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_etdiv")).args(args).output().expect("failed to run etdiv")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name).display().to_string()
}

fn tmp(name: &str, contents: &str) -> String {
    let p: PathBuf = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&p, contents).unwrap();
    p.display().to_string()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

#[test]
fn total_variation_divergence() {
    let o = etdiv(&["divergence", "-e", "chi:1", "--mu1", &data("mu1.json"), "--mu2", &data("mu2.json"), "--format", "json"]);
    assert!(o.status.success());
    let v = json(&o);
    assert_eq!(v["schema"], 1);
    // |1-4| + |2-1| + |0.5-0.5|
    assert_eq!(v["divergence"], 4.0);
    assert_eq!(v["reverse_divergence"], 4.0);
}

#[test]
fn identical_measures_have_zero_divergence() {
    let m = data("mu1.json");
    let v = json(&etdiv(&["divergence", "-e", "powerlike:2", "--mu1", &m, "--mu2", &m, "--format", "json"]));
    assert_eq!(v["divergence"], 0.0);
    assert_eq!(v["h_total"], 0.0);
}

#[test]
fn hellinger_row() {
    let a = tmp("one.json", r#"{"schema": 1, "masses": [1]}"#);
    let b = tmp("four.json", r#"{"schema": 1, "masses": [4]}"#);
    let o = etdiv(&["divergence", "-e", "powerlike:1", "--mu1", &a, "--mu2", &b]);
    let text = stdout(&o);
    assert!(text.contains("0,1,4,1\n"), "{text}");
    // D_{U_1}(1 || 4) = 4 U_1(1/4) = ln(1/4) - 1 + 4
    let d: f64 = text.lines().find_map(|l| l.strip_prefix("D_F = ")).unwrap().parse().unwrap();
    assert!((d - (0.25f64.ln() * 1.0 - 1.0 + 4.0)).abs() < 1e-12);
}

#[test]
fn metric_audit_fails_between_one_half_and_one() {
    let o = etdiv(&["metric-audit", "-e", "powerlike:0.75", "--a", "0.5"]);
    assert_eq!(o.status.code(), Some(1));
    let text = stdout(&o);
    assert!(text.contains("FAIL triangle"), "{text}");
    assert!(text.contains("witness: {\"u\":"), "{text}");
    assert!(text.contains("# seed = 0x5eed"), "{text}");
}

#[test]
fn metric_audit_passes_for_vincze_le_cam() {
    let o = etdiv(&["metric-audit", "-e", "powerlike:2", "--format", "json"]);
    assert!(o.status.success());
    let v = json(&o);
    assert_eq!(v["verdict"], "PASS");
    assert_eq!(v["config"]["seed"], "0x5eed");
}

#[test]
fn et_solve_matches_brute_force_on_bundled_example() {
    let o = etdiv(&["et-solve", &data("tiny_problem.json"), "--brute-force", "16", "--format", "json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    let value = v["value"].as_f64().unwrap();
    let bf = v["brute_force"]["min_energy"].as_f64().unwrap();
    assert!((value - bf).abs() < 1e-4, "{value} vs {bf}");
    assert_eq!(v["converged"], true);
    assert_eq!(v["plan"].as_array().unwrap().len(), 2);
}

#[test]
fn et_solve_pure_entropy() {
    let v = json(&etdiv(&["et-solve", &data("pure_entropy.json"), "--format", "json"]));
    assert!((v["value"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert_eq!(v["plan"][0][1], 0.0);
}

#[test]
fn plot_data_curves_vanish_at_one() {
    let o = etdiv(&["plot-data", "--family", "matusita", "--params", "0.25,0.5,1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("family,param,s,F(s)"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3 * 201);
    let at_one: Vec<_> = rows.iter().filter(|r| r[2] == "1").collect();
    assert_eq!(at_one.len(), 3);
    assert!(at_one.iter().all(|r| r[3] == "0"));
}

#[test]
fn iterate_writes_a_trace() {
    let o = etdiv(&["iterate", "-e", "chi:1", "--nodes", "16"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("# converged = true"), "{text}");
    let csv: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(csv[0], "iter,s,value");
    // Input plus one iteration on 16 nodes.
    assert_eq!(csv.len(), 1 + 2 * 16);
}

#[test]
fn cone_commands() {
    let o = etdiv(&["cone", "eval", "--p", "0", "--d", "1", "--r", "0", "--t", "1", "--format", "json"]);
    assert!((json(&o)["value"].as_f64().unwrap() - 3f64.ln()).abs() < 1e-12);

    let o = etdiv(&["cone", "triangle", "--p", "2", "--space", "path:3", "--samples", "500"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("PASS cone triangle"));

    let o = etdiv(&["cone", "triangle", "--p", "1", "--space", &format!("points:{}", data("plane5.csv")), "--no-stress"]);
    assert!(o.status.success());

    let v = json(&etdiv(&["cone", "counterexample", "--p", "0.25", "--format", "json"]));
    assert!(v["margin"].as_f64().unwrap() > 0.0);

    assert!(etdiv(&["cone", "final", "--p", "3"]).status.success());
    assert_eq!(etdiv(&["cone", "triangle", "--p", "0.5"]).status.code(), Some(2));
}

#[test]
fn distance_matrix_space_is_validated() {
    let bad = tmp("bad_metric.csv", "0,1,5\n1,0,1\n5,1,0\n");
    let o = etdiv(&["cone", "triangle", "--p", "1", "--space", &bad]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("triangle inequality"));
}

#[test]
fn bad_entropy_spec_is_reported() {
    let o = etdiv(&["metric-audit", "-e", "powerlike"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("etdiv: "));
    let o = etdiv(&["metric-audit", "-e", "chi:0.5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn metric_audit_rejects_exponent_above_one() {
    let out = etdiv(&["metric-audit", "-e", "powerlike:1", "--a", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--a must lie in (0, 1]"));
}
