use std::io::Write;
use std::time::{Duration, Instant};

use sqcat::analytics::{f3_beta_zero_opt, lossy_cat_overlap, success_probability};
use sqcat::cli::{cmd_fig1, OutputFormat};
use sqcat::fock::{DetectorModel, FockCutoff, C64};
use sqcat::optimize::{
    amplification_comparison, default_alpha_grid, success_beta_params, sweep, Scheme, SweepSpec,
};
use sqcat::pipeline::{lossy_cat_fidelity, richardson_slopes, run_circuit, CircuitSpec};
use sqcat::verify::{
    check_cutoff_doubling, check_kraus_completeness, check_number_blocks, check_parity,
    check_unitarity, f1_max, f3_max, fidelity_crossing, oracle_equivalence, CutoffChoice,
    RICHARDSON_SQUEEZING,
};

/// Prints the verdict outside the harness's capture, then asserts it.
fn report(n: u32, passed: bool, elapsed: Duration, limit: Duration, detail: String) {
    let in_time = elapsed <= limit;
    let verdict = if passed && in_time { "PASS" } else { "FAIL" };
    let line = format!(
        "criterion {n}: {verdict} | {detail} | {:.2}s (limit {}s)\n",
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    std::io::stderr().lock().write_all(line.as_bytes()).unwrap();
    assert!(passed, "criterion {n}: {detail}");
    assert!(in_time, "criterion {n}: took {elapsed:?}, limit {limit:?}");
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn sqrt6() -> f64 {
    6f64.sqrt()
}

#[test]
fn acc01_three_photon_fidelity() {
    let start = Instant::now();
    let f = f3_max(sqrt6());
    report(1, (f - 0.976).abs() <= 0.001, start.elapsed(), secs(1), format!("F3(√6) = {f:.6}, want 0.976 ± 0.001"));
}

#[test]
fn acc02_fidelity_thresholds() {
    let start = Instant::now();
    let a1 = fidelity_crossing(f1_max, 0.9, 1.0, 3.0).unwrap();
    let a3 = fidelity_crossing(f3_max, 0.9, 2.0, 5.0).unwrap();
    let ok = (a1 - 1.90).abs() <= 0.02 && (a3 - 3.30).abs() <= 0.03;
    report(
        2,
        ok,
        start.elapsed(),
        secs(1),
        format!("F1 crosses 0.9 at {a1:.4} (want 1.90 ± 0.02); F3 crosses 0.9 at {a3:.4} (want 3.30 ± 0.03)"),
    );
}

#[test]
fn acc03_beta_zero_optimum() {
    let start = Instant::now();
    let (r, f) = f3_beta_zero_opt(C64::from(sqrt6())).unwrap();
    let ok = (r - 0.62).abs() <= 0.01 && (f - 0.90).abs() <= 0.005;
    report(3, ok, start.elapsed(), secs(1), format!("r = {r:.5} (want 0.62 ± 0.01), F = {f:.5} (want 0.90 ± 0.005)"));
}

#[test]
fn acc04_lossy_overlap() {
    let start = Instant::now();
    let a = C64::from(sqrt6());
    let closed = lossy_cat_overlap(a, 0.01).unwrap();
    let numeric = lossy_cat_fidelity(a, 0.01, FockCutoff::new(60).unwrap()).unwrap();
    let ok = (closed - 0.94).abs() <= 0.005 && (numeric - 0.94).abs() <= 0.005 && (closed - numeric).abs() <= 1e-8;
    report(
        4,
        ok,
        start.elapsed(),
        secs(5),
        format!("closed {closed:.8}, trace-out {numeric:.8}, gap {:.1e}", (closed - numeric).abs()),
    );
}

#[test]
fn acc05_success_probabilities() {
    let start = Instant::now();
    let rep = sweep(&SweepSpec::new(vec![sqrt6()], Scheme::SuccessBetaZero).unwrap());
    let p0 = rep.rows[0].probability.unwrap();
    let zero_ok = (1.3e-2..=1.9e-2).contains(&p0) && rep.rows[0].converged;

    let params = success_beta_params(sqrt6()).unwrap();
    let cutoff = FockCutoff::policy(params.r(), sqrt6()).unwrap();
    let spec = CircuitSpec::three_photon(&params, DetectorModel::NumberResolvingOne, cutoff).unwrap();
    let simulated = run_circuit(&spec).unwrap().probability;
    let closed = success_probability(&params).unwrap();
    let beta_ok = (4.5e-4..=8e-4).contains(&simulated) && (simulated - closed).abs() <= 1e-8 * closed;
    report(
        5,
        zero_ok && beta_ok,
        start.elapsed(),
        secs(30),
        format!(
            "β=0: P = {p0:.4e} (want [1.3e-2, 1.9e-2]); β≠0 chain: P = {simulated:.4e} simulated, {closed:.4e} closed (want [4.5e-4, 8e-4])"
        ),
    );
}

#[test]
fn acc06_single_photon_comparison() {
    let start = Instant::now();
    let small = amplification_comparison(1.5f64.sqrt()).unwrap();
    let big = amplification_comparison(3f64.sqrt()).unwrap();
    let ok = (small.probability - 0.13).abs() <= 0.01 && (big.fidelity - 0.93).abs() <= 0.005;
    report(
        6,
        ok,
        start.elapsed(),
        secs(10),
        format!(
            "P(√(3/2)) = {:.4} (want 0.13 ± 0.01), F(√3) = {:.4} (want 0.93 ± 0.005)",
            small.probability, big.fidelity
        ),
    );
}

#[test]
fn acc07_oracle_equivalence() {
    let start = Instant::now();
    let s = oracle_equivalence(CutoffChoice::default()).unwrap();
    let ok = s.points == 50 && s.worst_fidelity() <= 1e-8 && s.probability_rel <= 1e-8;
    report(
        7,
        ok,
        start.elapsed(),
        secs(300),
        format!(
            "{} points; max |ΔF1| {:.1e}, |ΔF3| {:.1e}, |ΔF3 realistic| {:.1e}, max rel ΔP {:.1e}",
            s.points, s.f1_abs, s.f3_abs, s.f3_realistic_abs, s.probability_rel
        ),
    );
}

#[test]
fn acc08_first_order_limit() {
    let start = Instant::now();
    let cutoff = FockCutoff::for_squeezing(RICHARDSON_SQUEEZING).unwrap();
    let mut slopes = Vec::new();
    for beta in [C64::from(1.0), C64::new(0.3, -0.8), C64::default()] {
        slopes.extend(richardson_slopes(RICHARDSON_SQUEEZING, beta, cutoff).unwrap());
    }
    let ok = slopes.iter().all(|s| (s - 2.0).abs() <= 0.1);
    let shown: Vec<String> = slopes.iter().map(|s| format!("{s:.4}")).collect();
    report(8, ok, start.elapsed(), secs(30), format!("slopes [{}], want 2.0 ± 0.1", shown.join(", ")));
}

#[test]
fn acc09_property_suite() {
    let start = Instant::now();
    let c = CutoffChoice::default();
    let checks = [
        ("unitarity", check_unitarity()),
        ("number blocks", check_number_blocks()),
        ("parity", check_parity(c)),
        ("Kraus completeness", check_kraus_completeness(c)),
        ("cutoff doubling", check_cutoff_doubling(c)),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, outcome) in checks {
        let (passed, d) = outcome.unwrap_or_else(|e| (false, e.to_string()));
        ok &= passed;
        detail.push(format!("{name}: {d}"));
    }
    report(9, ok, start.elapsed(), secs(120), detail.join("; "));
}

#[test]
fn acc10_fig1_determinism() {
    let start = Instant::now();
    let grid = default_alpha_grid();
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        cmd_fig1(&grid, d.path(), OutputFormat::Csv).unwrap();
    }
    let mut ok = true;
    for name in ["fig1_fidelity.csv", "fig1_squeezing.csv"] {
        let a = std::fs::read(dirs[0].path().join(name)).unwrap();
        let b = std::fs::read(dirs[1].path().join(name)).unwrap();
        ok &= !a.is_empty() && a == b;
    }
    report(10, ok, start.elapsed(), secs(120), "two fig1 runs byte-identical".to_string());
}
