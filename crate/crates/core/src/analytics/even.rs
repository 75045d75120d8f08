use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::{check_alpha, Result};
use crate::fock::{
    add_scaled, annihilate, cat_state, fidelity, squeezed_vacuum, FockCutoff, Parity, PureState,
    C64,
};
use crate::optimize::{maximize_1d, maximize_nd, Bracket};

/// Largest squeezing the even-cat searches consider.
const R_MAX: f64 = 0.999;

/// Number of photons removed before comparing with the even cat.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvenScheme {
    /// bare squeezed vacuum
    Zero,
    /// `(â² - β²)|sq⟩`
    Two,
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvenFit {
    pub r: f64,
    /// Optimal `β²` for [`EvenScheme::Two`].
    pub beta_sq: Option<f64>,
    pub fidelity: f64,
    pub evaluations: usize,
}

fn squeezed_and_cat(alpha: f64, r: f64) -> Option<(PureState, PureState)> {
    let cutoff = FockCutoff::policy(r, alpha).ok()?;
    let sq = squeezed_vacuum(r, cutoff).ok()?;
    let cat = cat_state(C64::from(alpha), Parity::Even, cutoff).ok()?;
    Some((sq, cat))
}

/// Fidelity of `|sq(r)⟩` with the even cat.
pub(crate) fn zero_photon_fidelity(alpha: f64, r: f64) -> f64 {
    if !(0.0..=R_MAX).contains(&r) {
        return f64::NAN;
    }
    squeezed_and_cat(alpha, r)
        .and_then(|(sq, cat)| fidelity(&sq, &cat).ok())
        .unwrap_or(f64::NAN)
}

/// Fidelity of `cos θ â²|sq(r)⟩ - sin θ |sq(r)⟩` with the even cat; `θ`
/// parametrizes `β² = tan θ` without the singularity at `β² → ∞`.
pub(crate) fn two_photon_fidelity(alpha: f64, r: f64, theta: f64) -> f64 {
    if !(0.0..=R_MAX).contains(&r) || theta.abs() > FRAC_PI_2 {
        return f64::NAN;
    }
    let Some((sq, cat)) = squeezed_and_cat(alpha, r) else {
        return f64::NAN;
    };
    let a2 = annihilate(&annihilate(&sq)).scaled(C64::from(theta.cos()));
    let state = add_scaled(&a2, C64::from(-theta.sin()), &sq);
    fidelity(&state, &cat).unwrap_or(f64::NAN)
}

/// Numerically optimal even-cat fidelity from squeezed vacuum with zero or
/// two photons removed; `alpha` is canonicalized to `|α|`.
pub fn f_even_numeric(alpha: C64, scheme: EvenScheme) -> Result<EvenFit> {
    let a = check_alpha(alpha)?;
    match scheme {
        EvenScheme::Zero => {
            let opt = maximize_1d(|r| zero_photon_fidelity(a, r), &Bracket::new(0.0, R_MAX, 1e-10)?)?;
            Ok(EvenFit {
                r: opt.x,
                beta_sq: None,
                fidelity: opt.fx,
                evaluations: opt.iterations,
            })
        }
        EvenScheme::Two => {
            // coarse scan picks the basin
            let mut start = [0.5, 0.0];
            let mut best = f64::NEG_INFINITY;
            for i in 1..20 {
                let r = R_MAX * i as f64 / 20.0;
                for j in 0..24 {
                    let theta = -FRAC_PI_2 + std::f64::consts::PI * (j as f64 + 0.5) / 24.0;
                    let v = two_photon_fidelity(a, r, theta);
                    if v > best {
                        best = v;
                        start = [r, theta];
                    }
                }
            }
            let opt = maximize_nd(
                |v: &[f64]| two_photon_fidelity(a, v[0], v[1]),
                &start,
                &[0.02, 0.05],
            )?;
            Ok(EvenFit {
                r: opt.x[0],
                beta_sq: Some(opt.x[1].tan()),
                fidelity: opt.fx,
                evaluations: opt.evaluations,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_alpha_zero_scheme() {
        let fit = f_even_numeric(C64::from(0.05), EvenScheme::Zero).unwrap();
        assert!(fit.fidelity > 1.0 - 1e-6);
    }

    #[test]
    fn two_photons_dominate_zero() {
        let a = C64::from(1.5);
        let zero = f_even_numeric(a, EvenScheme::Zero).unwrap();
        let two = f_even_numeric(a, EvenScheme::Two).unwrap();
        assert!(two.fidelity >= zero.fidelity - 1e-9);
    }

    #[test]
    fn theta_half_pi_is_the_bare_vacuum() {
        let a = 1.2;
        let (sq, cat) = squeezed_and_cat(a, 0.3).unwrap();
        let direct = fidelity(&sq, &cat).unwrap();
        assert!((two_photon_fidelity(a, 0.3, -FRAC_PI_2) - direct).abs() < 1e-14);
    }
}
