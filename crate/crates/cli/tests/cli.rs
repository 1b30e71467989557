use std::path::PathBuf;
use std::process::{Command, Output};

use ssasl_core::pipeline::ConditionAnalysis;

fn case(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../cases").join(name).display().to_string()
}

fn ssasl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ssasl")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn error_report(o: &Output) -> serde_json::Value {
    let err = String::from_utf8(o.stderr.clone()).unwrap();
    let line = err.lines().rev().find(|l| l.starts_with('{')).expect("json error line");
    serde_json::from_str(line).unwrap()
}

#[test]
fn missing_case_is_a_config_error() {
    let o = ssasl(&["pf", "no/such/case.json"]);
    assert_eq!(o.status.code(), Some(1));
    let r = error_report(&o);
    assert_eq!(r["exit_code"], 1);
    assert!(r["error"].is_string() && r["message"].is_string());
}

#[test]
fn usage_errors_and_help() {
    assert_eq!(ssasl(&["pf"]).status.code(), Some(1));
    assert_eq!(ssasl(&["frobnicate"]).status.code(), Some(1));
    let h = ssasl(&["--help"]);
    assert_eq!(h.status.code(), Some(0));
    assert!(stdout(&h).contains("boundary"));
}

#[test]
fn pf_csv_lists_every_bus() {
    let o = ssasl(&["pf", &case("ieee9.json"), "--format", "csv"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("bus,vm_pu,va_deg"));
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 9);
    let slack: Vec<f64> = rows[0].split(',').map(|x| x.parse().unwrap()).collect();
    assert!((slack[1] - 1.04).abs() < 1e-9 && slack[2].abs() < 1e-9);
}

#[test]
fn pf_divergence_is_numeric() {
    let o = ssasl(&["pf", &case("ieee9.json"), "--set", "2=5000"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_report(&o)["exit_code"], 2);
}

#[test]
fn ssasl_json_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ssasl.json");
    let o = ssasl(&["ssasl", &case("ieee9.json"), "--variant", "all", "-o", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let a: ConditionAnalysis = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    // Two modes, two sides, three variants.
    assert_eq!(a.points.len(), 12);
    assert!(a.failures.is_empty());
    assert_eq!(a.frequencies_hz.len(), 2);
    assert!((a.p_mw.iter().sum::<f64>() - 319.6).abs() < 5.0);
}

#[test]
fn monitor_csv_columns() {
    let dir = tempfile::tempdir().unwrap();
    let scen = dir.path().join("scen.json");
    std::fs::write(&scen, r#"[{"3": 85.0}, {"3": 200.0}]"#).unwrap();
    let o = ssasl(&["monitor", &case("ieee9.json"), "--scenario", scen.to_str().unwrap(), "--variant", "ms3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("step,variant,mode,side,margin_mw,min_margin"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r.len() == 6 && r[1] == "ms3"));
    let min_of = |step: &str| -> f64 { rows.iter().find(|r| r[0] == step).unwrap()[5].parse().unwrap() };
    assert!(min_of("1") < min_of("0"));
}

#[test]
fn boundary_coarse_scan() {
    let o = ssasl(&["boundary", &case("ieee9.json"), "--gens", "2,3", "--res-deg", "90", "--check", "as"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("angle_deg,Pe_a_mw,Pe_b_mw,delta_a_rad,delta_b_rad,kind"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    let angles: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert_eq!(angles, vec![0.0, 90.0, 180.0, 270.0]);
    // Along +P3 the limit lies well above the base dispatch of gen 3.
    let pb: f64 = rows[1][2].parse().unwrap();
    assert!(pb > 300.0);
}

#[test]
fn show_config_and_bad_config() {
    let o = ssasl(&["--show-config"]);
    assert!(o.status.success());
    let cfg: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(cfg["power_flow"]["max_iterations"], 25);

    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.json");
    std::fs::write(&good, r#"{"scan": {"resolution_mw": 0.5}}"#).unwrap();
    let o = ssasl(&["--config", good.to_str().unwrap(), "--show-config"]);
    assert!(o.status.success());
    let cfg: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(cfg["scan"]["resolution_mw"], 0.5);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"scan": {"resolution": 0.5}}"#).unwrap();
    let o = ssasl(&["--config", bad.to_str().unwrap(), "pf", &case("ieee9.json")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(error_report(&o)["message"].as_str().unwrap().contains("resolution"));
}

#[test]
fn validate_passes_on_shipped_case() {
    let o = ssasl(&["validate", &case("ieee9.json")]);
    assert!(o.status.success(), "{}\n{}", stdout(&o), String::from_utf8_lossy(&o.stderr));
}
