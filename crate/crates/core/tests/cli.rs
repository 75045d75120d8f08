use std::path::Path;
use std::process::{Command, Output};

fn sqcat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sqcat")).args(args).output().unwrap()
}

fn stderr_line(out: &Output) -> String {
    let s = String::from_utf8_lossy(&out.stderr).to_string();
    assert_eq!(s.trim_end().lines().count(), 1, "{s}");
    s.trim_end().to_string()
}

fn column(path: &Path, alpha: &str, col: usize) -> f64 {
    let text = std::fs::read_to_string(path).unwrap();
    let row = text
        .lines()
        .find(|l| l.split(',').next() == Some(alpha))
        .unwrap_or_else(|| panic!("no row {alpha}"));
    row.split(',').nth(col).unwrap().parse().unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn fig1_default_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = sqcat(&["fig1", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let fid = dir.path().join("fig1_fidelity.csv");
    let text = std::fs::read_to_string(&fid).unwrap();
    assert!(text.starts_with("alpha,F0,F1,F2,F3,F3_beta0\n"));
    assert!(!text.contains('\r'));
    let f1 = column(&fid, "1.9", 2);
    assert!((0.895..=0.905).contains(&f1), "{f1}");
    let f3 = column(&fid, "2.45", 4);
    assert!((0.975..=0.977).contains(&f3), "{f3}");
    // F1 falls monotonically beyond its peak
    let f1s: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert!(f1s.windows(2).all(|w| w[1] <= w[0]));
    let sq = std::fs::read_to_string(dir.path().join("fig1_squeezing.csv")).unwrap();
    assert!(sq.starts_with("alpha,r1,r3,r3_beta0\n"));
}

#[test]
fn fig2_markers_and_zero_crossing() {
    let dir = tempfile::tempdir().unwrap();
    assert!(sqcat(&["fig2", "--out", dir.path().to_str().unwrap()]).status.success());
    let markers = std::fs::read_to_string(dir.path().join("fig2_markers.csv")).unwrap();
    assert_eq!(markers.lines().count(), 11);
    let beta1 = std::fs::read_to_string(dir.path().join("fig2_alpha_1_beta.csv")).unwrap();
    let min = beta1
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap())
        .fold(f64::INFINITY, f64::min);
    assert!(min < 1e-12, "{min}");
}

#[test]
fn fig4_probability_near_sqrt6() {
    let dir = tempfile::tempdir().unwrap();
    let out = sqcat(&["fig4", "--alpha-min", "2.4", "--alpha-max", "2.5", "--alpha-step", "0.05", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let p = column(&dir.path().join("fig4_success.csv"), "2.45", 1);
    assert!((1.3e-2..=1.9e-2).contains(&p), "{p}");
}

fn scenario(dir: &Path, body: &str) -> String {
    let path = dir.join("scenario.toml");
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn simulate_displaced_chain_and_click_variant() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path(), "scheme = \"three_photon\"\nalpha = 2.449489742783178\n");
    let nr1 = dir.path().join("nr1.json");
    let out = sqcat(&["simulate", &cfg, "--out", nr1.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&nr1);
    let f = v["fidelity_vs_target_cat"].as_f64().unwrap();
    assert!((f - 0.975).abs() < 0.002, "{f}");
    assert!(v["discrepancies"]["fidelity_abs"].as_f64().unwrap() < 1e-8);
    assert!(v["discrepancies"]["probability_rel"].as_f64().unwrap() < 1e-8);
    assert_eq!(v["per_stage_probabilities"].as_array().unwrap().len(), 3);

    let apd = dir.path().join("apd.json");
    assert!(sqcat(&["simulate", &cfg, "--detector", "apd", "--out", apd.to_str().unwrap()]).status.success());
    let w = json(&apd);
    assert!(w["fidelity_vs_target_cat"].as_f64().unwrap() < f);
    assert!(w["discrepancies"]["apd_fidelity_delta"].as_f64().unwrap() > 0.0);
}

#[test]
fn simulate_weak_single_tap_matches_one_photon_formula() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path(), "scheme = \"one_photon\"\nalpha = 1.2\nr = 0.3\nt1 = 0.9999\n");
    let out_path = dir.path().join("one.json");
    assert!(sqcat(&["simulate", &cfg, "--out", out_path.to_str().unwrap()]).status.success());
    let v = json(&out_path);
    let f = v["fidelity_vs_target_cat"].as_f64().unwrap();
    let closed = sqcat::analytics::f1(sqcat::fock::C64::from(1.2), 0.3 * 0.9999).unwrap();
    assert!((f - closed).abs() < 1e-6);
}

#[test]
fn error_paths_have_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenario(dir.path(), "scheme = \"three_photon\"\nalpha = 2.449489742783178\n");
    let out = sqcat(&["simulate", &cfg, "--cutoff", "12", "--out", dir.path().join("x.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let line = stderr_line(&out);
    assert!(line.starts_with("E3:tail_too_large:") && line.contains("raise --cutoff"), "{line}");

    let bad = scenario(dir.path(), "scheme = \"three_photon\"\nalpha = 2.0\nsqueeze = 0.3\n");
    let out = sqcat(&["simulate", &bad]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr_line(&out).starts_with("E3:invalid_config:"));

    let out = sqcat(&["fig1", "--alpha-step", "-1"]);
    assert_eq!(out.status.code(), Some(3));
    stderr_line(&out);
}

#[test]
fn verify_forced_cutoff_reports_truncation() {
    let dir = tempfile::tempdir().unwrap();
    let out = sqcat(&["verify", "--cutoff", "12", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_line(&out).starts_with("E1:verification_failed:"));
    let report = json(&dir.path().join("verify_report.json"));
    assert_eq!(report["passed"], false);
    let checks = report["checks"].as_array().unwrap();
    assert!(checks.iter().any(|c| c["detail"].as_str().unwrap().starts_with("tail_too_large")));
    let lossy = checks.iter().find(|c| c["name"] == "lossy_cat_overlap").unwrap();
    assert_eq!(lossy["passed"], false);
}

#[test]
fn verify_default_run_reports_every_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = sqcat(&["verify", "--out", dir.path().to_str().unwrap()]);
    let report = json(&dir.path().join("verify_report.json"));
    let checks = report["checks"].as_array().unwrap();
    let lossy = checks.iter().find(|c| c["name"] == "lossy_cat_overlap").unwrap();
    assert_eq!(lossy["passed"], true);
    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| c["passed"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    // exit status follows the report
    assert_eq!(out.status.success(), failed.is_empty());
    assert_eq!(report["passed"], failed.is_empty());
}
