use serde::{Deserialize, Serialize};

use super::{check_alpha, odd_overlap, AnalyticsError, Result};
use crate::fock::C64;
use crate::optimize::find_root;

/// Tolerance on the reflectivity tie `R₃ = R₂/√T₂`.
pub const TIE_TOL: f64 = 1e-12;

/// Parameters of the three-tap circuit: input squeezing, tap transmissivities
/// and the trigger displacement scale `β`.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealisticParams {
    r: f64,
    t1: f64,
    t2: f64,
    t3: f64,
    beta: C64,
    x: f64,
}

impl RealisticParams {
    pub fn new(r: f64, t1: f64, t2: f64, t3: f64, beta: C64) -> Result<Self> {
        if !(0.0..1.0).contains(&r) {
            return Err(AnalyticsError::Domain(format!("r = {r} outside [0, 1)")));
        }
        for (name, t) in [("T1", t1), ("T2", t2), ("T3", t3)] {
            if !(t > 0.0 && t < 1.0) {
                return Err(AnalyticsError::Domain(format!("{name} = {t} outside (0, 1)")));
            }
        }
        if !(beta.re.is_finite() && beta.im.is_finite()) {
            return Err(AnalyticsError::Domain(format!("beta = {beta} not finite")));
        }
        Ok(Self { r, t1, t2, t3, beta, x: r * t1 * t2 * t3 })
    }

    /// Parameters with `T₃` set by the tie `R₃ = R₂/√T₂`.
    pub fn tied(r: f64, t1: f64, t2: f64, beta: C64) -> Result<Self> {
        let t3 = 1.0 - (1.0 - t2) / t2.sqrt();
        Self::new(r, t1, t2, t3, beta)
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn t2(&self) -> f64 {
        self.t2
    }

    pub fn t3(&self) -> f64 {
        self.t3
    }

    pub fn beta(&self) -> C64 {
        self.beta
    }

    /// Effective squeezing `r·T₁·T₂·T₃`.
    pub fn x(&self) -> f64 {
        self.x
    }

    /// `|R₃ - R₂/√T₂|`.
    pub fn tie_residual(&self) -> f64 {
        ((1.0 - self.t3) - (1.0 - self.t2) / self.t2.sqrt()).abs()
    }

    /// With `β = 0` the output is `t^{n̂}â³`-shaped for any transmissivities,
    /// so the tie only binds when a displacement is present.
    fn check_tie(&self) -> Result<()> {
        if self.beta.norm() > 0.0 && self.tie_residual() > TIE_TOL {
            return Err(AnalyticsError::ConstraintViolated(format!(
                "R3 = R2/sqrt(T2) fails by {:e}",
                self.tie_residual()
            )));
        }
        Ok(())
    }

    /// `t₂t₃²β²`, the displacement the output state effectively carries.
    fn effective_beta_sq(&self) -> C64 {
        self.t2.sqrt() * self.t3 * self.beta * self.beta
    }

    /// Extra denominator term `(t₂-1)² t₃² |β|² (1+2x²)/(1-x²)` from the
    /// imperfect cancellation of the two displacements.
    fn extra_term(&self) -> f64 {
        let x2 = self.x * self.x;
        (self.t2.sqrt() - 1.0).powi(2) * self.t3 * self.beta.norm_sqr() * (1.0 + 2.0 * x2) / (1.0 - x2)
    }
}

/// Denominator terms shared by the ideal and realistic three-photon fidelity.
fn base_denominator(x: f64, b2: C64) -> f64 {
    let s = 1.0 - x * x;
    b2.norm_sqr() - 6.0 * b2.re * x / s + 9.0 * x * x / s + 15.0 * x.powi(4) / (s * s)
}

/// Fidelity of the three-tap circuit output with the odd cat of amplitude
/// `alpha`: the ideal three-photon fidelity at `x` and `t₂t₃²β²`, with one
/// extra denominator term.
pub fn f3_realistic(alpha: C64, p: &RealisticParams) -> Result<f64> {
    check_alpha(alpha)?;
    p.check_tie()?;
    let x = p.x;
    let b2 = p.effective_beta_sq();
    let amp = 3.0 * x + x * x * alpha * alpha - b2.conj();
    let den = base_denominator(x, b2) + p.extra_term();
    if !(den > 0.0) {
        return Err(AnalyticsError::Domain("circuit output vanishes (x = 0, beta = 0)".into()));
    }
    Ok(amp.norm_sqr() / den * odd_overlap(alpha, x))
}

/// Joint probability of the three single-photon detections.
pub fn success_probability(p: &RealisticParams) -> Result<f64> {
    p.check_tie()?;
    let (r, x) = (p.r, p.x);
    let (t1, t2, t3) = (p.t1, p.t2, p.t3);
    let (r1, r2, r3) = (1.0 - t1, 1.0 - t2, 1.0 - t3);
    let b = p.beta.norm_sqr();
    let x2 = x * x;
    let s = 1.0 - x2;
    let pre = r1 * r2 * r3 / (t1 * t2 * t2 * t3.powi(3))
        * (-(r2 + r3) * b).exp()
        * ((1.0 - r * r) / s).sqrt();
    let bracket = t2 * t3 * t3 * b * b * x2 / s
        + (t2.sqrt() - 1.0).powi(2) * t3 * b * x2 * (1.0 + 2.0 * x2) / (s * s)
        - 2.0 * t2.sqrt() * t3 * (p.beta * p.beta).re * 3.0 * x.powi(3) / (s * s)
        + 3.0 * x2 * x2 * (3.0 + 2.0 * x2) / s.powi(3);
    Ok(pre * bracket)
}

/// `T₁` maximizing [`success_probability`] at fixed `x`, `T₂`, `T₃`.
pub fn t1_opt(x: f64, t2: f64, t3: f64) -> Result<f64> {
    for (name, v) in [("x", x), ("T2", t2), ("T3", t3)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(AnalyticsError::Domain(format!("{name} = {v} outside (0, 1)")));
        }
    }
    let k2 = (t2 * t3).powi(2);
    let x2 = x * x;
    // (√(x⁴ + 8k²x²) - x²)/(2k²), rationalized
    let t1 = 4.0 * x2 / ((x2 * x2 + 8.0 * k2 * x2).sqrt() + x2);
    let r = x / (t1 * t2 * t3);
    if !(t1 > 0.0 && t1 < 1.0) || !(r < 1.0) {
        return Err(AnalyticsError::InvalidRegime(format!(
            "T1 = {t1} implies r = {r} for x = {x}, T2 = {t2}, T3 = {t3}"
        )));
    }
    Ok(t1)
}

/// Picks `T₂` so that the extra denominator term of [`f3_realistic`] is
/// `1e-3` of the remaining terms, ties `T₃` to it, and rescales `β` so the
/// effective displacement `t₂t₃²β²` equals `beta_target_sq`.
/// Returns `(T₂, T₃, β)`.
pub fn choose_t2(alpha: C64, x: f64, beta_target_sq: C64) -> Result<(f64, f64, C64)> {
    check_alpha(alpha)?;
    if !(x > 0.0 && x < 1.0) {
        return Err(AnalyticsError::Domain(format!("x = {x} outside (0, 1)")));
    }
    let b = beta_target_sq.norm();
    let rest = base_denominator(x, beta_target_sq);
    if !(b > 0.0) || !(rest > 0.0) {
        return Err(AnalyticsError::NoSolution(
            "extra term vanishes identically for beta = 0".into(),
        ));
    }
    let x2 = x * x;
    // with t₂t₃²β² fixed, the extra term is (t₂-1)²|β²_target|/t₂ (1+2x²)/(1-x²),
    // independent of T₃
    let ratio = |t2: f64| {
        let t = t2.sqrt();
        (t - 1.0).powi(2) * b / t * (1.0 + 2.0 * x2) / (1.0 - x2) / rest - 1e-3
    };
    // T₃ = 1 - R₂/√T₂ stays in (0,1) only for T₂ above the golden-ratio root
    let t2_min = ((5f64.sqrt() - 1.0) / 2.0).powi(2);
    let t2 = find_root(ratio, t2_min, 1.0, 1e-12).map_err(|_| {
        AnalyticsError::NoSolution(format!("extra-term ratio 1e-3 unattainable for x = {x}"))
    })?;
    let t3 = 1.0 - (1.0 - t2) / t2.sqrt();
    if !(t3 > 0.0 && t3 < 1.0) {
        return Err(AnalyticsError::NoSolution(format!("tied T3 = {t3} outside (0, 1)")));
    }
    let beta = (beta_target_sq / (t2.sqrt() * t3)).sqrt();
    Ok((t2, t3, beta))
}

/// Probability of a single-photon detection on one tap of transmissivity
/// `t1` applied to `|sq(r)⟩`: `R₁/T₁ √((1-r²)/(1-x²)) x²/(1-x²)` with `x = rT₁`.
pub fn single_photon_probability(r: f64, t1: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&r) || !(t1 > 0.0 && t1 < 1.0) {
        return Err(AnalyticsError::Domain(format!("r = {r}, T1 = {t1} out of range")));
    }
    let x = r * t1;
    let s = 1.0 - x * x;
    Ok((1.0 - t1) / t1 * ((1.0 - r * r) / s).sqrt() * x * x / s)
}
