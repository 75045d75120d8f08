use serde::{Deserialize, Serialize};

use super::FockError;

/// Highest retained Fock level. The basis has `n_max + 1` states.
#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct FockCutoff(usize);

/// Floor applied by [`FockCutoff::policy`].
pub const MIN_POLICY_CUTOFF: usize = 40;

/// Squeezed-vacuum tail targeted by the cutoff policy.
pub const POLICY_TAIL: f64 = 1e-14;

/// Largest probability a constructor may discard before it refuses to
/// renormalize.
pub const MAX_DISCARDED: f64 = 1e-12;

impl FockCutoff {
    pub fn new(n_max: usize) -> Result<Self, FockError> {
        if n_max < 1 {
            return Err(FockError::InvalidCutoff(n_max));
        }
        Ok(Self(n_max))
    }

    pub fn n_max(self) -> usize {
        self.0
    }

    /// Basis size, `n_max + 1`.
    pub fn dim(self) -> usize {
        self.0 + 1
    }

    pub fn max(self, other: Self) -> Self {
        Self(self.0.max(other.0))
    }

    /// Cutoff grown by `extra` levels.
    pub fn padded(self, extra: usize) -> Self {
        Self(self.0 + extra)
    }

    /// Default cutoff for a squeezed vacuum with parameter `r` and a target
    /// cat of amplitude `alpha`:
    /// `max(40, smallest even N with squeezed tail < 1e-14, ceil(|α|² + 8|α| + 20))`.
    pub fn policy(r: f64, alpha_abs: f64) -> Result<Self, FockError> {
        let squeeze = squeezed_cutoff(r, POLICY_TAIL)?;
        let cat = (alpha_abs * alpha_abs + 8.0 * alpha_abs + 20.0).ceil() as usize;
        Ok(Self(MIN_POLICY_CUTOFF.max(squeeze).max(cat)))
    }

    /// Policy cutoff when only a squeezed vacuum is involved.
    pub fn for_squeezing(r: f64) -> Result<Self, FockError> {
        Self::policy(r, 0.0)
    }

    /// Policy cutoff when only a cat or coherent state of amplitude `alpha_abs`
    /// is involved.
    pub fn for_amplitude(alpha_abs: f64) -> Self {
        let cat = (alpha_abs * alpha_abs + 8.0 * alpha_abs + 20.0).ceil() as usize;
        Self(MIN_POLICY_CUTOFF.max(cat))
    }
}

impl TryFrom<usize> for FockCutoff {
    type Error = FockError;

    fn try_from(n_max: usize) -> Result<Self, Self::Error> {
        Self::new(n_max)
    }
}

impl From<FockCutoff> for usize {
    fn from(c: FockCutoff) -> usize {
        c.0
    }
}

impl std::fmt::Display for FockCutoff {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Working-dimension headroom for a displacement by `beta`:
/// `ceil(4|β|² + 8|β| + 10)`.
pub fn displacement_padding(beta_abs: f64) -> usize {
    (4.0 * beta_abs * beta_abs + 8.0 * beta_abs + 10.0).ceil() as usize
}

/// Photon-number probabilities `|c_{2n}|²` of the squeezed vacuum, indexed by
/// `n` (photon number `2n`), generated until the remaining tail is below
/// `1e-300` or negligible relative to the accumulated total.
fn squeezed_pair_weights(r: f64) -> Vec<f64> {
    let r2 = r * r;
    let mut w = (1.0 - r2).sqrt();
    let mut out = vec![w];
    if r == 0.0 {
        return out;
    }
    let mut n = 0usize;
    loop {
        w *= r2 * (2 * n + 1) as f64 / (2 * n + 2) as f64;
        n += 1;
        out.push(w);
        // ratio of successive weights is below r², so the rest is bounded by
        // w r² / (1 - r²)
        if w <= 1e-300 || w * r2 / (1.0 - r2) < 1e-30 {
            break;
        }
    }
    out
}

/// Probability of the squeezed vacuum beyond Fock level `n_max`.
pub fn squeezed_tail(r: f64, n_max: usize) -> f64 {
    squeezed_pair_weights(r)
        .into_iter()
        .enumerate()
        .filter(|(n, _)| 2 * n > n_max)
        .map(|(_, w)| w)
        .sum()
}

/// Smallest even cutoff whose squeezed-vacuum tail is below `tail`.
pub fn squeezed_cutoff(r: f64, tail: f64) -> Result<usize, FockError> {
    if !(0.0..1.0).contains(&r) {
        return Err(FockError::Domain(format!("squeezing r = {r} outside [0, 1)")));
    }
    let weights = squeezed_pair_weights(r);
    // suffix[m] = sum of weights with index >= m
    let mut suffix = vec![0.0; weights.len() + 1];
    for m in (0..weights.len()).rev() {
        suffix[m] = suffix[m + 1] + weights[m];
    }
    // keeping pairs 0..=m leaves suffix[m + 1]
    let m = (0..weights.len())
        .find(|&m| suffix[m + 1] < tail)
        .unwrap_or(weights.len());
    Ok((2 * m).max(2))
}

/// Probability of a coherent state of amplitude `alpha_abs` beyond `n_max`.
pub fn coherent_tail(alpha_abs: f64, n_max: usize) -> f64 {
    let a2 = alpha_abs * alpha_abs;
    let mut p = (-a2).exp();
    let mut tail = 0.0;
    let mut n = 0usize;
    loop {
        if n > n_max {
            tail += p;
            // past n = |α|² the terms shrink at least geometrically
            if p == 0.0 || (n as f64 > 2.0 * a2 && p <= 1e-30 * tail) {
                return tail;
            }
        }
        n += 1;
        p *= a2 / n as f64;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_zero_cutoff() {
        assert!(matches!(FockCutoff::new(0), Err(FockError::InvalidCutoff(0))));
        assert_eq!(FockCutoff::new(1).unwrap().dim(), 2);
    }

    #[test]
    fn policy_floor_and_amplitude_term() {
        assert_eq!(FockCutoff::policy(0.0, 0.0).unwrap().n_max(), 40);
        // |α| = 5: 25 + 40 + 20
        assert_eq!(FockCutoff::policy(0.0, 5.0).unwrap().n_max(), 85);
    }

    #[test]
    fn squeezed_cutoff_meets_tail_and_is_minimal() {
        for &r in &[0.3, 0.62, 0.8, 0.9] {
            let n = squeezed_cutoff(r, POLICY_TAIL).unwrap();
            assert_eq!(n % 2, 0);
            assert!(squeezed_tail(r, n) < POLICY_TAIL);
            assert!(squeezed_tail(r, n - 2) >= POLICY_TAIL);
        }
    }

    #[test]
    fn squeezed_tail_matches_one_minus_kept() {
        let r: f64 = 0.7;
        let kept: f64 = squeezed_pair_weights(r).iter().take(6).sum();
        assert!((squeezed_tail(r, 10) - (1.0 - kept)).abs() < 1e-14);
    }

    #[test]
    fn coherent_tail_small_cases() {
        assert!((coherent_tail(1.0, 0) - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
        assert!(coherent_tail(2.0, 60) < 1e-30);
    }

    #[test]
    fn displacement_padding_values() {
        assert_eq!(displacement_padding(0.0), 10);
        assert_eq!(displacement_padding(1.0), 22);
    }
}
