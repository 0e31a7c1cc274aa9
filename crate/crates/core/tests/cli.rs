use std::path::Path;
use std::process::{Command, Output};

fn ftpellet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ftpellet"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_rows(path: &Path) -> (String, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn site_json_round_trips() {
    let o = ftpellet(&["--json", "site", "--p-co", "2", "--p-h2", "4"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let s = v["solution"]["s"].as_f64().unwrap();
    assert!(s > 0.0 && s <= 1.0);
    assert!(v["solution"]["residual"].as_f64().unwrap() < 1e-10);
    assert!((v["backend_s"].as_f64().unwrap() - s).abs() <= 1e-12 * s);
    assert_eq!(v["backend"], "exact");
}

#[test]
fn site_rejects_negative_pressure() {
    let o = ftpellet(&["site", "--p-co", "-1", "--p-h2", "4"]);
    assert!(!o.status.success());
    assert!(!o.stderr.is_empty());
}

#[test]
fn pellet_writes_profile_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = ftpellet(&["--out", out, "--grid", "60", "pellet", "--p-co", "2", "--p-h2", "4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = csv_rows(&dir.path().join("profile.csv"));
    assert_eq!(header, "x,w_CO,w_H2,w_H2O");
    assert_eq!(rows.len(), 60);
    assert_eq!(rows[0][0], 0.0);
    assert_eq!(rows[59][0], 1.0);
    assert!(rows.iter().flatten().all(|v| *v >= 0.0));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["report"]["converged"], true);
    let eta = report["derived"]["eta_co"].as_f64().unwrap();
    assert!(eta > 0.0 && eta < 1.1);
}

#[test]
fn baseline_backend_reports_failure_with_exit_status() {
    let o = ftpellet(&["--backend", "baseline10y", "pellet", "--p-co", "6", "--p-h2", "0.1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn validate_passes_on_placeholder_set() {
    let o = ftpellet(&["--json", "validate"]);
    assert!(o.status.success(), "{}", stdout(&o));
}

#[test]
fn toy_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = ftpellet(&["--out", dir.path().to_str().unwrap(), "--grid", "101", "toy"]);
    assert!(o.status.success());
    let (header, rows) = csv_rows(&dir.path().join("toy_profiles.csv"));
    assert_eq!(header, "x,exact,approx1,approx2,analytic");
    assert_eq!(rows.len(), 101);
    for r in &rows {
        assert!((r[1] - r[4]).abs() < 1e-3);
    }
    assert!(rows.iter().any(|r| r[2] < 0.0));
    assert!(dir.path().join("toy_sources.csv").is_file());
    assert!(dir.path().join("toy_summary.json").is_file());
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "grid = 40\njson = true\n\n[pellet]\nradius = 0.5e-3\n").unwrap();
    let cfg = cfg.to_str().unwrap();

    let o = ftpellet(&["--config", cfg, "pellet", "--p-co", "2", "--p-h2", "4"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["profile"]["x"].as_array().unwrap().len(), 40);

    let o = ftpellet(&["--config", cfg, "--grid", "30", "pellet", "--p-co", "2", "--p-h2", "4"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["profile"]["x"].as_array().unwrap().len(), 30);
}

#[test]
fn unknown_config_key_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "grdi = 40\n").unwrap();
    let o = ftpellet(&["--config", cfg.to_str().unwrap(), "site", "--p-co", "1", "--p-h2", "1"]);
    assert!(!o.status.success());
}

#[test]
fn small_sweep_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = ftpellet(&["--out", dir.path().to_str().unwrap(), "--jobs", "2", "sweep", "--n", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 9);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("sweep_summary.json")).unwrap()).unwrap();
    assert!(summary.is_object());
}
