//! Closed-form fidelities, optimal parameters and success probabilities for
//! odd cats made by subtracting photons from squeezed vacuum, plus numeric
//! optima for the even-cat schemes, which have no closed form.

mod even;
mod realistic;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fock::{FockError, C64};
use crate::optimize::{maximize_1d, Bracket, OptimizeError, Optimum1d};

pub use even::{f_even_numeric, EvenFit, EvenScheme};
pub(crate) use even::{two_photon_fidelity, zero_photon_fidelity};
pub use realistic::{
    choose_t2, f3_realistic, single_photon_probability, success_probability, t1_opt,
    RealisticParams, TIE_TOL,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticsError {
    #[error("{0}")]
    Domain(String),
    #[error("constraint violated: {0}")]
    ConstraintViolated(String),
    #[error("invalid regime: {0}")]
    InvalidRegime(String),
    #[error("no solution: {0}")]
    NoSolution(String),
    #[error(transparent)]
    Optimize(#[from] OptimizeError),
    #[error(transparent)]
    Fock(#[from] FockError),
}

pub type Result<T> = std::result::Result<T, AnalyticsError>;

/// Which stationary point of the three-photon fidelity: `Plus` is the global
/// maximum, `Minus` the secondary one.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

fn check_r(r: f64) -> Result<()> {
    if !(0.0..1.0).contains(&r) {
        return Err(AnalyticsError::Domain(format!("r = {r} outside [0, 1)")));
    }
    Ok(())
}

fn check_alpha(alpha: C64) -> Result<f64> {
    let a = alpha.norm();
    if !(a > 0.0) || !a.is_finite() {
        return Err(AnalyticsError::Domain(format!("alpha = {alpha} must be nonzero and finite")));
    }
    Ok(a)
}

/// `|α|² / sinh|α|²` times `e^{r Re α²} (1-r²)^{3/2}`: the one-photon
/// fidelity, which every odd-cat formula carries as a factor.
fn odd_overlap(alpha: C64, r: f64) -> f64 {
    let a2 = alpha.norm_sqr();
    // |α|²e^{r Re α²}/sinh|α|² written as 2|α|² e^{r Re α² - |α|²}/(1 - e^{-2|α|²})
    let ratio = 2.0 * a2 * (r * (alpha * alpha).re - a2).exp() / -(-2.0 * a2).exp_m1();
    (1.0 - r * r).powf(1.5) * ratio
}

/// Fidelity of the normalized `â|sq(r)⟩` with the odd cat of amplitude `alpha`.
pub fn f1(alpha: C64, r: f64) -> Result<f64> {
    check_r(r)?;
    check_alpha(alpha)?;
    Ok(odd_overlap(alpha, r))
}

/// Squeezing that maximizes [`f1`] for real `alpha`; the caller passes `|α|`.
pub fn r1_opt(alpha: C64) -> Result<f64> {
    let a = check_alpha(alpha)?;
    let a2 = a * a;
    // (√(9+4α⁴) - 3)/(2α²), rationalized for small α
    Ok(2.0 * a2 / ((9.0 + 4.0 * a2 * a2).sqrt() + 3.0))
}

/// Fidelity of the normalized `(â² - β²)â|sq(r)⟩` with the odd cat.
pub fn f3(alpha: C64, r: f64, beta_sq: C64) -> Result<f64> {
    check_r(r)?;
    check_alpha(alpha)?;
    let s = 1.0 - r * r;
    let amp = 3.0 * r + r * r * alpha * alpha - beta_sq.conj();
    let den = beta_sq.norm_sqr() - 6.0 * beta_sq.re * r / s + 9.0 * r * r / s + 15.0 * r.powi(4) / (s * s);
    if !(den > 0.0) {
        return Err(AnalyticsError::Domain(
            "(â²-β²)â annihilates the vacuum: r = 0 and β = 0".into(),
        ));
    }
    Ok(amp.norm_sqr() / den * odd_overlap(alpha, r))
}

/// Stationary squeezing of [`f3`] on the given branch, for real `alpha`.
pub fn r3_opt(alpha: C64, branch: Branch) -> Result<f64> {
    let a = check_alpha(alpha)?;
    let a2 = a * a;
    let c = 5.0 + branch.sign() * 10f64.sqrt();
    Ok(2.0 * a2 / ((c * c + 4.0 * a2 * a2).sqrt() + c))
}

/// Stationary `β²` of [`f3`] on the given branch: `3α²/(7 ± 2√10)`.
pub fn beta_opt_sq(alpha: C64, branch: Branch) -> Result<C64> {
    check_alpha(alpha)?;
    Ok(3.0 * alpha * alpha / (7.0 + branch.sign() * 2.0 * 10f64.sqrt()))
}

/// Maximizes [`f3`] over `r` with `β = 0`; returns `(r, F)`.
pub fn f3_beta_zero_opt(alpha: C64) -> Result<(f64, f64)> {
    let opt = f3_beta_zero_search(alpha)?;
    Ok((opt.x, opt.fx))
}

/// [`f3_beta_zero_opt`] with the optimizer's bookkeeping.
pub fn f3_beta_zero_search(alpha: C64) -> Result<Optimum1d> {
    let a = C64::from(check_alpha(alpha)?);
    let bracket = Bracket::new(1e-9, 1.0 - 1e-9, 1e-10)?;
    Ok(maximize_1d(|r| f3(a, r, C64::default()).unwrap_or(f64::NAN), &bracket)?)
}

/// Overlap of an odd cat that lost a fraction `reflectivity` of its energy
/// with the original cat:
/// `cosh(R|α|²) sinh²(√(1-R)|α|²) / sinh²|α|²`.
pub fn lossy_cat_overlap(alpha: C64, reflectivity: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&reflectivity) {
        return Err(AnalyticsError::Domain(format!(
            "reflectivity {reflectivity} outside [0, 1)"
        )));
    }
    let a2 = check_alpha(alpha)?.powi(2);
    let s = (1.0 - reflectivity).sqrt() * a2;
    // sinh(s)/sinh(a2) without overflow
    let ratio = (s - a2).exp() * (-2.0 * s).exp_m1() / (-2.0 * a2).exp_m1();
    Ok((reflectivity * a2).cosh() * ratio * ratio)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn re(x: f64) -> C64 {
        C64::from(x)
    }

    #[test]
    fn f1_reference_values() {
        let a = 6f64.sqrt();
        assert!((f1(re(a), 0.0).unwrap() - 6.0 / 6f64.sinh()).abs() < 1e-15);
        // (√153 - 3)/12
        assert!((r1_opt(re(a)).unwrap() - (153f64.sqrt() - 3.0) / 12.0).abs() < 1e-15);
        assert!(f1(re(1.0), 1.0).is_err());
        assert!(f1(re(0.0), 0.3).is_err());
    }

    #[test]
    fn r1_small_alpha() {
        let a = 1e-4;
        assert!((r1_opt(re(a)).unwrap() / (a * a / 3.0) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn f3_zero_on_the_numerator_root() {
        let (a, r) = (1.3, 0.4);
        let b2 = 3.0 * r + r * r * a * a;
        assert_eq!(f3(re(a), r, re(b2)).unwrap(), 0.0);
        assert!(f3(re(a), 0.0, re(0.0)).is_err());
    }

    #[test]
    fn f3_reference_values() {
        let a = re(6f64.sqrt());
        let r = r3_opt(a, Branch::Plus).unwrap();
        let b2 = beta_opt_sq(a, Branch::Plus).unwrap();
        assert!((r - 0.529_21).abs() < 1e-5);
        assert!((b2.re - 1.350_89).abs() < 1e-5);
        assert!((f3(a, r, b2).unwrap() - 0.975_825).abs() < 1e-6);
    }

    #[test]
    fn conjugate_symmetry() {
        let a = C64::new(1.1, 0.7);
        let b2 = C64::new(0.4, -0.2);
        let x = f3(a, 0.35, b2).unwrap();
        let y = f3(a.conj(), 0.35, b2.conj()).unwrap();
        assert!((x - y).abs() < 1e-14);
        assert!((f1(a, 0.3).unwrap() - f1(a.conj(), 0.3).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn large_alpha_is_finite() {
        let v = f1(re(40.0), 0.99).unwrap();
        assert!(v.is_finite() && v >= 0.0);
        let l = lossy_cat_overlap(re(40.0), 0.01).unwrap();
        assert!(l.is_finite());
    }

    #[test]
    fn lossy_overlap_values() {
        let a = re(6f64.sqrt());
        assert!((lossy_cat_overlap(a, 0.0).unwrap() - 1.0).abs() < 1e-15);
        let v = lossy_cat_overlap(a, 0.01).unwrap();
        let direct = (0.06f64).cosh() * (0.99f64.sqrt() * 6.0).sinh().powi(2) / 6f64.sinh().powi(2);
        assert!((v - direct).abs() < 1e-14);
        assert!(lossy_cat_overlap(a, 1.0).is_err());
    }

    #[test]
    fn beta_zero_optimum() {
        let (r, f) = f3_beta_zero_opt(re(6f64.sqrt())).unwrap();
        assert!((r - 0.622_78).abs() < 1e-4);
        assert!((f - 0.897_43).abs() < 1e-4);
    }
}
