//! Self-verification: closed forms against the numerical circuit, structural
//! properties of the Fock-space operations, and regression values.

use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::analytics::{
    self, beta_opt_sq, f1, f3, f3_beta_zero_opt, f3_realistic, lossy_cat_overlap, r1_opt, r3_opt,
    success_probability, AnalyticsError, Branch, RealisticParams,
};
use crate::fock::{
    annihilate, apply_beam_splitter, beam_splitter, cat_state, condition_on_detection,
    detection_amplitudes, displace, displacement_padding, squeezed_vacuum,
    DetectorModel, FockCutoff, FockError, Parity, PureState, TwoModeState, C64,
};
use crate::optimize::{
    amplification_comparison, default_alpha_grid, find_root, success_beta_params, sweep,
    OptimizeError, Scheme, SweepSpec,
};
use crate::pipeline::{
    lossy_cat_fidelity, richardson_slopes, run_circuit, subtracted_fidelity, CircuitSpec,
    CircuitStage, PipelineError,
};

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Optimize(#[from] OptimizeError),
}

impl VerifyError {
    /// Whether the failure is a Fock truncation that discarded too much.
    pub fn is_tail_too_large(&self) -> bool {
        let fock = match self {
            Self::Fock(e) => Some(e),
            Self::Analytics(AnalyticsError::Fock(e)) => Some(e),
            Self::Pipeline(PipelineError::Fock(e)) => Some(e),
            _ => None,
        };
        matches!(fock, Some(FockError::TailTooLarge { .. }))
    }
}

pub type Result<T> = std::result::Result<T, VerifyError>;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub passed: bool,
    /// Truncation forced on every numerical check, if any.
    pub cutoff_override: Option<usize>,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Truncation for numerical checks: the forced one, or the default.
#[derive(Copy, Clone, Debug, Default, PartialEq)]
pub struct CutoffChoice(pub Option<FockCutoff>);

impl CutoffChoice {
    fn or(self, default: impl FnOnce() -> std::result::Result<FockCutoff, FockError>) -> Result<FockCutoff> {
        match self.0 {
            Some(c) => Ok(c),
            None => Ok(default()?),
        }
    }
}

/// Outcome of one check: pass flag and a human-readable measurement.
type Outcome = (bool, String);

fn timed(name: &str, f: impl FnOnce() -> Result<Outcome>) -> Check {
    let start = Instant::now();
    let (passed, detail) = match f() {
        Ok(o) => o,
        Err(e) if e.is_tail_too_large() => (false, format!("tail_too_large: {e}")),
        Err(e) => (false, format!("error: {e}")),
    };
    Check {
        name: name.to_string(),
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn within(value: f64, target: f64, tol: f64) -> Outcome {
    ((value - target).abs() <= tol, format!("{value:.6} (expected {target} ± {tol})"))
}

/// Amplitude at which the optimized fidelity `f(α)` falls through `level`.
pub fn fidelity_crossing(f: impl Fn(f64) -> f64, level: f64, lo: f64, hi: f64) -> Result<f64> {
    Ok(find_root(|a| f(a) - level, lo, hi, 1e-12)?)
}

/// Largest one-photon fidelity at amplitude `alpha`.
pub fn f1_max(alpha: f64) -> f64 {
    let a = C64::from(alpha);
    r1_opt(a).and_then(|r| f1(a, r)).unwrap_or(f64::NAN)
}

/// Largest three-photon fidelity at amplitude `alpha`.
pub fn f3_max(alpha: f64) -> f64 {
    let a = C64::from(alpha);
    let run = || -> analytics::Result<f64> {
        f3(a, r3_opt(a, Branch::Plus)?, beta_opt_sq(a, Branch::Plus)?)
    };
    run().unwrap_or(f64::NAN)
}

/// Largest gaps between the closed forms and their numerical counterparts.
#[derive(Copy, Clone, Debug, Default, PartialEq, Serialize)]
pub struct OracleSummary {
    pub points: usize,
    pub f1_abs: f64,
    pub f3_abs: f64,
    pub f3_realistic_abs: f64,
    pub probability_rel: f64,
}

impl OracleSummary {
    pub fn worst_fidelity(&self) -> f64 {
        self.f1_abs.max(self.f3_abs).max(self.f3_realistic_abs)
    }
}

/// The `(α, r, β)` points of the oracle comparison.
pub fn oracle_grid() -> Vec<(C64, f64, C64)> {
    let alphas = [
        C64::from(0.8),
        C64::from(1.5),
        C64::new(1.8, 0.9),
        C64::from(2.6),
        C64::from(3.2),
    ];
    let squeezing = [0.25, 0.5];
    let betas = [
        C64::default(),
        C64::from(0.6),
        C64::from(1.2),
        C64::new(0.4, 0.7),
        C64::new(-0.9, 0.3),
    ];
    let mut out = Vec::with_capacity(50);
    for &a in &alphas {
        for &r in &squeezing {
            for &b in &betas {
                out.push((a, r, b));
            }
        }
    }
    out
}

/// Transmissivities used at every oracle point; `T₃` follows from the tie.
const ORACLE_T1: f64 = 0.85;
const ORACLE_T2: f64 = 0.92;

/// Compares `f1`, `f3`, `f3_realistic` and the success probability with the
/// simulated circuit and direct operator action over [`oracle_grid`].
pub fn oracle_equivalence(cutoff: CutoffChoice) -> Result<OracleSummary> {
    let mut s = OracleSummary::default();
    for (alpha, r, beta) in oracle_grid() {
        let n = cutoff.or(|| FockCutoff::policy(r, alpha.norm()))?;
        let cat = cat_state(alpha, Parity::Odd, n)?;

        // a bare tap leaves t^n̂ â|sq(r)⟩ ∝ â|sq(rT)⟩
        let tap = CircuitStage::subtracting(ORACLE_T1, C64::default(), DetectorModel::NumberResolvingOne)?;
        let one = run_circuit(&CircuitSpec::new(r, vec![tap], n)?)?;
        let gap = (one.output.fidelity_with(&cat)? - f1(alpha, r * ORACLE_T1)?).abs();
        s.f1_abs = s.f1_abs.max(gap);

        let b2 = beta * beta;
        let gap = (subtracted_fidelity(alpha, r, Some(b2), n)? - f3(alpha, r, b2)?).abs();
        s.f3_abs = s.f3_abs.max(gap);

        let p = RealisticParams::tied(r, ORACLE_T1, ORACLE_T2, beta)?;
        let run = run_circuit(&CircuitSpec::three_photon(&p, DetectorModel::NumberResolvingOne, n)?)?;
        let gap = (run.output.fidelity_with(&cat)? - f3_realistic(alpha, &p)?).abs();
        s.f3_realistic_abs = s.f3_realistic_abs.max(gap);
        let closed = success_probability(&p)?;
        s.probability_rel = s.probability_rel.max((run.probability - closed).abs() / closed);
        s.points += 1;
    }
    Ok(s)
}

/// Deterministic, irregular test amplitudes on `0..=n_max`.
fn sample_state(seed: f64, n_max: usize) -> PureState {
    let v = (0..=n_max)
        .map(|k| {
            let k = k as f64;
            C64::new((1.7 * k + seed).sin(), (0.6 * k * k + 2.0 * seed).cos()) / (1.0 + 0.3 * k)
        })
        .collect();
    PureState::from_vec(v)
        .and_then(|s| s.normalized())
        .expect("sample amplitudes are nonzero")
}

/// Displacement and beam splitter preserve the norm of sampled states.
pub fn check_unitarity() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for (i, beta) in [C64::new(0.7, -0.4), C64::new(-1.2, 0.9), C64::new(0.05, 0.0)].into_iter().enumerate() {
        let s = sample_state(i as f64, 12);
        let padded = s.with_cutoff(s.cutoff().padded(displacement_padding(beta.norm())))?;
        worst = worst.max((displace(&padded, beta)?.norm_sq() - 1.0).abs());
    }
    for (i, t) in [0.05, 0.5, 0.93].into_iter().enumerate() {
        let joint = beam_splitter(&sample_state(i as f64, 10), &sample_state(3.0 + i as f64, 6), t)?;
        worst = worst.max((joint.norm_sq() - 1.0).abs());
    }
    Ok((worst < 1e-10, format!("max norm drift {worst:.2e}")))
}

/// The beam splitter does not move weight between total-photon-number blocks.
pub fn check_number_blocks() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for (i, t) in [0.1, 0.64, 0.99].into_iter().enumerate() {
        let a = sample_state(0.3 + i as f64, 9);
        let b = sample_state(1.1 + i as f64, 5);
        let before = TwoModeState::product(&a, &b).block_weights();
        let after = beam_splitter(&a, &b, t)?.block_weights();
        for (n, w) in after.iter().enumerate() {
            worst = worst.max((w - before.get(n).copied().unwrap_or(0.0)).abs());
        }
    }
    Ok((worst < 1e-12, format!("max block weight change {worst:.2e}")))
}

/// Squeezed vacuum and even cats are even, odd cats and one subtraction odd.
pub fn check_parity(cutoff: CutoffChoice) -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for r in [0.2, 0.6, 0.85] {
        let n = cutoff.or(|| FockCutoff::for_squeezing(r))?;
        let sq = squeezed_vacuum(r, n)?;
        worst = worst.max(sq.parity_weight(1));
        worst = worst.max(annihilate(&sq).parity_weight(0));
    }
    for a in [0.5, 2.0, 4.0] {
        let n = cutoff.or(|| Ok(FockCutoff::for_amplitude(a)))?;
        worst = worst.max(cat_state(C64::from(a), Parity::Odd, n)?.parity_weight(0));
        worst = worst.max(cat_state(C64::from(a), Parity::Even, n)?.parity_weight(1));
    }
    Ok((worst == 0.0, format!("max wrong-parity weight {worst:.2e}")))
}

/// No-click, exactly-one and more-than-one outcomes of a tap exhaust
/// probability, and a click never undercounts a single photon.
pub fn check_kraus_completeness(cutoff: CutoffChoice) -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut ordered = true;
    for (r, t, g) in [(0.3, 0.95, 0.0), (0.6, 0.8, 0.4), (0.7, 0.6, 0.9)] {
        let n = cutoff.or(|| FockCutoff::for_squeezing(r))?;
        let sq = squeezed_vacuum(r, n)?;
        let joint = apply_beam_splitter(&TwoModeState::product(&sq, &PureState::vacuum(FockCutoff::new(1)?)), t)?;
        let gamma = C64::new(0.0, g);
        let (_, p_click) = condition_on_detection(&joint, DetectorModel::ClickApd, gamma)?;
        let (_, p_one) = condition_on_detection(&joint, DetectorModel::NumberResolvingOne, gamma)?;
        let p_none = detection_amplitudes(&joint, gamma)?.column(0).norm_squared();
        worst = worst.max((p_click + p_none - 1.0).abs());
        ordered &= p_one <= p_click;
    }
    Ok((worst < 1e-10 && ordered, format!("max completeness defect {worst:.2e}")))
}

/// Fidelity of `â|sq⟩` with an odd cat barely moves when the cutoff doubles.
pub fn check_cutoff_doubling(cutoff: CutoffChoice) -> Result<Outcome> {
    let alpha = C64::from(6f64.sqrt());
    let mut worst: f64 = 0.0;
    for r in [0.3, 0.62, 0.9] {
        let n = cutoff.or(|| FockCutoff::policy(r, alpha.norm()))?;
        let f = |c: FockCutoff| -> Result<f64> { Ok(subtracted_fidelity(alpha, r, None, c)?) };
        worst = worst.max((f(n)? - f(FockCutoff::new(2 * n.n_max())?)?).abs());
    }
    Ok((worst < 1e-9, format!("max drift {worst:.2e}")))
}

/// Squeezing used by the first-order convergence check.
pub const RICHARDSON_SQUEEZING: f64 = 0.4;

/// Residual of one heralded tap against `(â + β)|sq⟩` falls as `R²`.
pub fn check_first_order_limit(cutoff: CutoffChoice) -> Result<Outcome> {
    let n = cutoff.or(|| FockCutoff::for_squeezing(RICHARDSON_SQUEEZING))?;
    let mut detail = Vec::new();
    let mut ok = true;
    for beta in [C64::from(1.0), C64::new(0.3, -0.8)] {
        let s = richardson_slopes(RICHARDSON_SQUEEZING, beta, n)?;
        ok &= s.iter().all(|v| (v - 2.0).abs() <= 0.1);
        detail.push(format!("β={beta}: {:.3}, {:.3}", s[0], s[1]));
    }
    Ok((ok, format!("slopes {}", detail.join("; "))))
}

fn check_oracles(cutoff: CutoffChoice) -> Result<Outcome> {
    let s = oracle_equivalence(cutoff)?;
    Ok((
        s.worst_fidelity() <= 1e-8 && s.probability_rel <= 1e-8,
        format!(
            "{} points: F1 {:.1e}, F3 {:.1e}, realistic F3 {:.1e}, P rel {:.1e}",
            s.points, s.f1_abs, s.f3_abs, s.f3_realistic_abs, s.probability_rel
        ),
    ))
}

fn check_stationarity() -> Result<Outcome> {
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for a in [0.7, 1.9, 2.449_489_742_783_178, 4.2] {
        let a = C64::from(a);
        let r1 = r1_opt(a)?;
        worst = worst.max(((f1(a, r1 + h)? - f1(a, r1 - h)?) / (2.0 * h)).abs());
        let r3 = r3_opt(a, Branch::Plus)?;
        let b2 = beta_opt_sq(a, Branch::Plus)?;
        worst = worst.max(((f3(a, r3 + h, b2)? - f3(a, r3 - h, b2)?) / (2.0 * h)).abs());
        let db = C64::from(h);
        worst = worst.max(((f3(a, r3, b2 + db)? - f3(a, r3, b2 - db)?) / (2.0 * h)).abs());
    }
    Ok((worst < 1e-6, format!("max gradient {worst:.2e}")))
}

fn check_fidelity_range() -> Result<Outcome> {
    let mut bad = 0;
    let mut count = 0;
    for i in 0..12 {
        let a = C64::from_polar(0.3 + 0.4 * i as f64, 0.37 * i as f64);
        for j in 0..10 {
            let r = 0.05 + 0.09 * j as f64;
            for b in [C64::default(), C64::new(0.8, -0.3), C64::from(2.5)] {
                for v in [f1(a, r), f3(a, r, b)] {
                    let v = v?;
                    count += 1;
                    if !(0.0..=1.0).contains(&v) {
                        bad += 1;
                    }
                }
            }
        }
    }
    Ok((bad == 0, format!("{bad} of {count} values outside [0, 1]")))
}

fn check_conjugation_symmetry() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for (a, b2) in [(C64::new(1.1, 0.7), C64::new(0.4, -0.2)), (C64::new(-2.0, 0.3), C64::new(1.5, 0.9))] {
        worst = worst.max((f3(a, 0.35, b2)? - f3(a.conj(), 0.35, b2.conj())?).abs());
        worst = worst.max((f1(a, 0.35)? - f1(a.conj(), 0.35)?).abs());
    }
    Ok((worst < 1e-13, format!("max asymmetry {worst:.2e}")))
}

fn check_lossy_overlap(cutoff: CutoffChoice) -> Result<Outcome> {
    let a = C64::from(6f64.sqrt());
    let closed = lossy_cat_overlap(a, 0.01)?;
    let n = cutoff.or(|| Ok(FockCutoff::for_amplitude(a.norm())))?;
    let numeric = lossy_cat_fidelity(a, 0.01, n)?;
    let monotone = [0.0, 0.005, 0.01, 0.05, 0.2]
        .windows(2)
        .map(|w| Ok(lossy_cat_overlap(a, w[1])? < lossy_cat_overlap(a, w[0])?))
        .collect::<Result<Vec<bool>>>()?
        .into_iter()
        .all(|b| b);
    let ok = (closed - 0.94).abs() <= 0.005 && (closed - numeric).abs() <= 1e-8 && monotone;
    Ok((
        ok,
        format!("closed {closed:.6}, trace-out {numeric:.6}, decreasing in loss: {monotone}"),
    ))
}

fn check_sweep_dominance() -> Result<Outcome> {
    let grid = default_alpha_grid();
    let run = |s| -> Result<_> { Ok(sweep(&SweepSpec::new(grid.clone(), s)?)) };
    let one = run(Scheme::OnePhoton)?;
    let three = run(Scheme::ThreePhoton)?;
    let zero = run(Scheme::ThreePhotonBetaZero)?;
    let e0 = run(Scheme::EvenZero)?;
    let e2 = run(Scheme::EvenTwo)?;
    let mut violations = 0;
    for i in 0..grid.len() {
        let f = |rep: &crate::optimize::OptimizationReport| rep.rows[i].fidelity.unwrap_or(f64::NAN);
        if !(f(&three) >= f(&zero) - 1e-9 && f(&zero) >= f(&one) - 1e-9 && f(&e2) >= f(&e0) - 1e-9) {
            violations += 1;
        }
    }
    let degraded = [&one, &three, &zero, &e0, &e2]
        .iter()
        .map(|r| r.failure_fraction())
        .fold(0.0, f64::max);
    Ok((
        violations == 0 && degraded == 0.0,
        format!("{violations} ordering violations over {} amplitudes; worst failed-row fraction {degraded}", grid.len()),
    ))
}

fn sqrt6() -> f64 {
    6f64.sqrt()
}

fn regression_f3_sqrt6() -> Result<Outcome> {
    Ok(within(f3_max(sqrt6()), 0.976, 0.001))
}

fn regression_f1_threshold() -> Result<Outcome> {
    Ok(within(fidelity_crossing(f1_max, 0.9, 1.0, 3.0)?, 1.90, 0.02))
}

fn regression_f3_threshold() -> Result<Outcome> {
    Ok(within(fidelity_crossing(f3_max, 0.9, 2.0, 5.0)?, 3.30, 0.03))
}

fn regression_beta_zero() -> Result<Outcome> {
    let (r, f) = f3_beta_zero_opt(C64::from(sqrt6()))?;
    let (okr, dr) = within(r, 0.62, 0.01);
    let (okf, df) = within(f, 0.90, 0.005);
    Ok((okr && okf, format!("r {dr}; F {df}")))
}

fn regression_probability_beta_zero() -> Result<Outcome> {
    let rep = sweep(&SweepSpec::new(vec![sqrt6()], Scheme::SuccessBetaZero)?);
    let row = &rep.rows[0];
    let p = row.probability.unwrap_or(f64::NAN);
    Ok(((1.3e-2..=1.9e-2).contains(&p) && row.converged, format!("P = {p:.4e} (expected in [1.3e-2, 1.9e-2])")))
}

fn regression_probability_beta() -> Result<Outcome> {
    let p = success_probability(&success_beta_params(sqrt6())?)?;
    Ok(((4.5e-4..=8e-4).contains(&p), format!("P = {p:.4e} (expected in [4.5e-4, 8e-4])")))
}

fn regression_amplification() -> Result<Outcome> {
    let small = amplification_comparison(1.5f64.sqrt())?;
    let big = amplification_comparison(3f64.sqrt())?;
    let (okp, dp) = within(small.probability, 0.13, 0.01);
    let (okf, df) = within(big.fidelity, 0.93, 0.005);
    Ok((okp && okf, format!("P {dp}; F {df}; P⁴ = {:.3e}", small.probability_pow4)))
}

/// Every check, in report order.
pub fn run_all(cutoff: CutoffChoice) -> VerifyReport {
    let checks = vec![
        timed("unitarity", check_unitarity),
        timed("number_block_conservation", check_number_blocks),
        timed("parity", || check_parity(cutoff)),
        timed("kraus_completeness", || check_kraus_completeness(cutoff)),
        timed("cutoff_doubling_stability", || check_cutoff_doubling(cutoff)),
        timed("fidelity_range", check_fidelity_range),
        timed("conjugation_symmetry", check_conjugation_symmetry),
        timed("optimum_stationarity", check_stationarity),
        timed("closed_form_vs_circuit", || check_oracles(cutoff)),
        timed("first_order_tap_limit", || check_first_order_limit(cutoff)),
        timed("lossy_cat_overlap", || check_lossy_overlap(cutoff)),
        timed("scheme_fidelity_ordering", check_sweep_dominance),
        timed("three_photon_fidelity_sqrt6", regression_f3_sqrt6),
        timed("one_photon_threshold", regression_f1_threshold),
        timed("three_photon_threshold", regression_f3_threshold),
        timed("beta_zero_optimum_sqrt6", regression_beta_zero),
        timed("success_probability_beta_zero", regression_probability_beta_zero),
        timed("success_probability_displaced", regression_probability_beta),
        timed("single_photon_comparison", regression_amplification),
    ];
    VerifyReport {
        passed: checks.iter().all(|c| c.passed),
        cutoff_override: cutoff.0.map(FockCutoff::n_max),
        checks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossings_bracket_the_level() {
        let a = fidelity_crossing(f1_max, 0.9, 1.0, 3.0).unwrap();
        assert!((f1_max(a) - 0.9).abs() < 1e-10);
        assert!(f1_max(a - 0.01) > 0.9);
    }

    #[test]
    fn forced_small_cutoff_is_reported_as_tail() {
        let c = timed("x", || check_parity(CutoffChoice(Some(FockCutoff::new(12).unwrap()))));
        assert!(!c.passed);
        assert!(c.detail.starts_with("tail_too_large"), "{}", c.detail);
    }

    #[test]
    fn structural_checks_pass() {
        assert!(check_unitarity().unwrap().0);
        assert!(check_number_blocks().unwrap().0);
        assert!(check_conjugation_symmetry().unwrap().0);
    }
}
