use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{central_derivative, gradient, maximize_1d, maximize_nd, Bracket, OptimizeError};
use crate::analytics::{
    self, beta_opt_sq, choose_t2, f1, f3, f3_beta_zero_search, f3_realistic, f_even_numeric, r1_opt,
    r3_opt, single_photon_probability, success_probability, t1_opt, AnalyticsError, Branch,
    EvenScheme, RealisticParams,
};
use crate::fock::C64;

/// Option key for the gradient-norm bound a converged row must meet.
pub const STATIONARITY_TOL: &str = "stationarity_tol";

const DEFAULT_STATIONARITY_TOL: f64 = 1e-6;

/// Smallest and largest amplitude a sweep accepts.
pub const ALPHA_RANGE: (f64, f64) = (0.2, 5.0);

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// `â|sq⟩` at the closed-form optimal squeezing
    OnePhoton,
    /// `(â² - β²)â|sq⟩` at the closed-form global optimum
    ThreePhoton,
    /// `â³|sq⟩` maximized over `r`
    ThreePhotonBetaZero,
    /// bare squeezed vacuum against the even cat
    EvenZero,
    /// `(â² - β²)|sq⟩` against the even cat
    EvenTwo,
    /// success probability of the `β = 0` three-tap circuit, maximized over
    /// the transmissivities at the `β = 0` optimal `x`
    SuccessBetaZero,
    /// the three-tap circuit with displaced triggers: optimal `x` and `β²`,
    /// `T₂` from the extra-term rule, tied `T₃`, optimal `T₁`
    SuccessBeta,
}

impl Scheme {
    pub const ALL: [Scheme; 7] = [
        Scheme::OnePhoton,
        Scheme::ThreePhoton,
        Scheme::ThreePhotonBetaZero,
        Scheme::EvenZero,
        Scheme::EvenTwo,
        Scheme::SuccessBetaZero,
        Scheme::SuccessBeta,
    ];
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    alpha_grid: Vec<f64>,
    scheme: Scheme,
    options: BTreeMap<String, f64>,
}

impl SweepSpec {
    pub fn new(alpha_grid: Vec<f64>, scheme: Scheme) -> Result<Self, OptimizeError> {
        if alpha_grid.is_empty() {
            return Err(OptimizeError::InvalidGrid("empty alpha grid".into()));
        }
        for w in alpha_grid.windows(2) {
            if !(w[0] < w[1]) {
                return Err(OptimizeError::InvalidGrid(format!(
                    "alpha grid not strictly increasing at {} -> {}",
                    w[0], w[1]
                )));
            }
        }
        let (lo, hi) = ALPHA_RANGE;
        if let Some(a) = alpha_grid.iter().find(|a| !(**a >= lo - 1e-12 && **a <= hi + 1e-12)) {
            return Err(OptimizeError::InvalidGrid(format!("alpha {a} outside [{lo}, {hi}]")));
        }
        let mut options = BTreeMap::new();
        options.insert(STATIONARITY_TOL.to_string(), DEFAULT_STATIONARITY_TOL);
        Ok(Self {
            alpha_grid,
            scheme,
            options,
        })
    }

    pub fn with_option(mut self, key: &str, value: f64) -> Result<Self, OptimizeError> {
        if key != STATIONARITY_TOL || !(value > 0.0) {
            return Err(OptimizeError::InvalidGrid(format!("unsupported option {key} = {value}")));
        }
        self.options.insert(key.to_string(), value);
        Ok(self)
    }

    pub fn alpha_grid(&self) -> &[f64] {
        &self.alpha_grid
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn options(&self) -> &BTreeMap<String, f64> {
        &self.options
    }

    fn tolerance(&self) -> f64 {
        self.options[STATIONARITY_TOL]
    }
}

/// Evenly spaced amplitudes `lo, lo + step, …` up to `hi` inclusive, built
/// from integer multiples so every point is reproducible.
pub fn alpha_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>, OptimizeError> {
    if !(step > 0.0) || !(lo <= hi) {
        return Err(OptimizeError::InvalidGrid(format!("grid {lo}..{hi} step {step}")));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| lo + step * k as f64).collect())
}

/// The default grid: 0.2 to 5.0 in steps of 0.05.
pub fn default_alpha_grid() -> Vec<f64> {
    (0..=96).map(|k| (20 + 5 * k) as f64 / 100.0).collect()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub alpha: f64,
    pub r: Option<f64>,
    pub beta_sq: Option<f64>,
    pub t1: Option<f64>,
    pub t2: Option<f64>,
    pub t3: Option<f64>,
    pub fidelity: Option<f64>,
    pub probability: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Norm of the central-difference gradient of the row's objective over
    /// its free parameters; zero when nothing was optimized.
    pub gradient_norm: f64,
    pub error: Option<String>,
}

impl ReportRow {
    fn failed(alpha: f64, err: impl ToString) -> Self {
        Self {
            alpha,
            error: Some(err.to_string()),
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationReport {
    pub scheme: Scheme,
    pub options: BTreeMap<String, f64>,
    pub rows: Vec<ReportRow>,
}

impl OptimizationReport {
    /// Fraction of rows that errored or missed the stationarity tolerance.
    pub fn failure_fraction(&self) -> f64 {
        let bad = self.rows.iter().filter(|r| r.error.is_some() || !r.converged).count();
        bad as f64 / self.rows.len().max(1) as f64
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|g| g * g).sum::<f64>().sqrt()
}

fn nan_on_err(v: Result<f64, AnalyticsError>) -> f64 {
    v.unwrap_or(f64::NAN)
}

fn one_photon(alpha: f64, tol: f64) -> Result<ReportRow, AnalyticsError> {
    let a = C64::from(alpha);
    let r = r1_opt(a)?;
    let g = central_derivative(|r| nan_on_err(f1(a, r)), r, 1e-6).abs();
    Ok(ReportRow {
        alpha,
        r: Some(r),
        fidelity: Some(f1(a, r)?),
        converged: g < tol,
        gradient_norm: g,
        ..ReportRow::default()
    })
}

fn three_photon(alpha: f64, tol: f64) -> Result<ReportRow, AnalyticsError> {
    let a = C64::from(alpha);
    let r = r3_opt(a, Branch::Plus)?;
    let b2 = beta_opt_sq(a, Branch::Plus)?.re;
    let g = norm(&gradient(
        |v: &[f64]| nan_on_err(f3(a, v[0], C64::from(v[1]))),
        &[r, b2],
        &[1.0, 1.0],
    ));
    Ok(ReportRow {
        alpha,
        r: Some(r),
        beta_sq: Some(b2),
        fidelity: Some(f3(a, r, C64::from(b2))?),
        converged: g < tol,
        gradient_norm: g,
        ..ReportRow::default()
    })
}

fn three_photon_beta_zero(alpha: f64, tol: f64) -> Result<ReportRow, AnalyticsError> {
    let a = C64::from(alpha);
    let opt = f3_beta_zero_search(a)?;
    let g = central_derivative(|r| nan_on_err(f3(a, r, C64::default())), opt.x, 1e-6).abs();
    Ok(ReportRow {
        alpha,
        r: Some(opt.x),
        beta_sq: Some(0.0),
        fidelity: Some(opt.fx),
        converged: g < tol,
        iterations: opt.iterations,
        gradient_norm: g,
        ..ReportRow::default()
    })
}

fn even(alpha: f64, scheme: EvenScheme, tol: f64) -> Result<ReportRow, AnalyticsError> {
    let fit = f_even_numeric(C64::from(alpha), scheme)?;
    let g = match fit.beta_sq {
        None => central_derivative(|r| analytics::zero_photon_fidelity(alpha, r), fit.r, 1e-6).abs(),
        Some(b2) => norm(&gradient(
            |v: &[f64]| analytics::two_photon_fidelity(alpha, v[0], v[1]),
            &[fit.r, b2.atan()],
            &[1.0, 1.0],
        )),
    };
    Ok(ReportRow {
        alpha,
        r: Some(fit.r),
        beta_sq: fit.beta_sq,
        fidelity: Some(fit.fidelity),
        converged: g < tol,
        iterations: fit.evaluations,
        gradient_norm: g,
        ..ReportRow::default()
    })
}

/// Success probability of the `β = 0` circuit with `x` fixed, as a function
/// of the three transmissivities; NaN outside the physical region.
fn beta_zero_probability(x: f64, t: &[f64]) -> f64 {
    let r = x / (t[0] * t[1] * t[2]);
    RealisticParams::new(r, t[0], t[1], t[2], C64::default())
        .and_then(|p| success_probability(&p))
        .unwrap_or(f64::NAN)
}

fn success_beta_zero(alpha: f64, tol: f64) -> Result<ReportRow, AnalyticsError> {
    let a = C64::from(alpha);
    let bz = f3_beta_zero_search(a)?;
    let x = bz.x;
    let start_t = 0.9f64.max(x.powf(1.0 / 3.0) + 0.02).min(0.99);
    let start = [t1_opt(x, start_t, start_t).unwrap_or(start_t), start_t, start_t];
    let opt = maximize_nd(|t: &[f64]| beta_zero_probability(x, t), &start, &[0.02, 0.02, 0.02])?;
    let g = norm(&gradient(|t: &[f64]| beta_zero_probability(x, t), &opt.x, &[1.0, 1.0, 1.0]));
    let (t1, t2, t3) = (opt.x[0], opt.x[1], opt.x[2]);
    Ok(ReportRow {
        alpha,
        r: Some(x / (t1 * t2 * t3)),
        beta_sq: Some(0.0),
        t1: Some(t1),
        t2: Some(t2),
        t3: Some(t3),
        fidelity: Some(bz.fx),
        probability: Some(opt.fx),
        converged: g < tol,
        iterations: bz.iterations + opt.evaluations,
        gradient_norm: g,
        error: None,
    })
}

/// Parameters of the displaced three-tap circuit at amplitude `alpha`.
pub fn success_beta_params(alpha: f64) -> Result<RealisticParams, AnalyticsError> {
    let a = C64::from(alpha);
    let x = r3_opt(a, Branch::Plus)?;
    let b2 = beta_opt_sq(a, Branch::Plus)?;
    let (t2, t3, beta) = choose_t2(a, x, b2)?;
    let t1 = t1_opt(x, t2, t3)?;
    RealisticParams::new(x / (t1 * t2 * t3), t1, t2, t3, beta)
}

fn success_beta(alpha: f64) -> Result<ReportRow, AnalyticsError> {
    let p = success_beta_params(alpha)?;
    Ok(ReportRow {
        alpha,
        r: Some(p.r()),
        beta_sq: Some((p.beta() * p.beta()).re),
        t1: Some(p.t1()),
        t2: Some(p.t2()),
        t3: Some(p.t3()),
        fidelity: Some(f3_realistic(C64::from(alpha), &p)?),
        probability: Some(success_probability(&p)?),
        // every parameter is fixed by a rule; nothing is searched
        converged: true,
        ..ReportRow::default()
    })
}

fn row(scheme: Scheme, alpha: f64, tol: f64) -> ReportRow {
    let out = match scheme {
        Scheme::OnePhoton => one_photon(alpha, tol),
        Scheme::ThreePhoton => three_photon(alpha, tol),
        Scheme::ThreePhotonBetaZero => three_photon_beta_zero(alpha, tol),
        Scheme::EvenZero => even(alpha, EvenScheme::Zero, tol),
        Scheme::EvenTwo => even(alpha, EvenScheme::Two, tol),
        Scheme::SuccessBetaZero => success_beta_zero(alpha, tol),
        Scheme::SuccessBeta => success_beta(alpha),
    };
    out.unwrap_or_else(|e| ReportRow::failed(alpha, e))
}

/// Evaluates the scheme on every grid amplitude, in parallel; rows come back
/// in grid order and a failing row records its error instead of aborting.
pub fn sweep(spec: &SweepSpec) -> OptimizationReport {
    let tol = spec.tolerance();
    let rows = spec
        .alpha_grid
        .par_iter()
        .map(|&a| row(spec.scheme, a, tol))
        .collect();
    OptimizationReport {
        scheme: spec.scheme,
        options: spec.options.clone(),
        rows,
    }
}

/// Points per tolerance curve.
pub const CURVE_POINTS: usize = 201;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveAxis {
    /// `r` varies, `β² = β²_opt`
    Squeezing,
    /// real `β ≥ 0` varies, `r = r₃`
    Displacement,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToleranceCurve {
    pub alpha: f64,
    pub axis: CurveAxis,
    /// Samples on an even grid; the displacement curve also carries the
    /// exact zero of the fidelity when it falls in range.
    pub points: Vec<(f64, f64)>,
    /// Location and value of the curve maximum, found by a 1-D search.
    pub max_at: f64,
    pub max_fidelity: f64,
}

fn curve(
    alpha: f64,
    axis: CurveAxis,
    lo: f64,
    hi: f64,
    f: impl Fn(f64) -> f64,
) -> Result<ToleranceCurve, OptimizeError> {
    let step = (hi - lo) / (CURVE_POINTS - 1) as f64;
    let points = (0..CURVE_POINTS)
        .map(|i| {
            let v = lo + step * i as f64;
            (v, f(v))
        })
        .collect();
    let opt = maximize_1d(&f, &Bracket::new(lo, hi, 1e-11)?)?;
    Ok(ToleranceCurve {
        alpha,
        axis,
        points,
        max_at: opt.x,
        max_fidelity: opt.fx,
    })
}

/// Three-photon fidelity around its optimum: along `r` at `β = β_opt` over
/// `r ∈ (0, 1)`, and along real `β ∈ [0, 2β_opt]` at `r = r₃`.
pub fn tolerance_curves(alphas: &[f64]) -> Result<Vec<ToleranceCurve>, AnalyticsError> {
    let mut out = Vec::with_capacity(2 * alphas.len());
    for &alpha in alphas {
        let a = C64::from(alpha);
        let r3 = r3_opt(a, Branch::Plus)?;
        let b2 = beta_opt_sq(a, Branch::Plus)?;
        let beta = b2.re.sqrt();
        out.push(curve(alpha, CurveAxis::Squeezing, 1e-6, 1.0 - 1e-6, |r| {
            nan_on_err(f3(a, r, b2))
        })?);
        let mut along_beta = curve(alpha, CurveAxis::Displacement, 0.0, 2.0 * beta, |b| {
            nan_on_err(f3(a, r3, C64::from(b * b)))
        })?;
        // the exact zero of 3r + r²α² - β² is kept as a sample when in range
        let root = (3.0 * r3 + r3 * r3 * alpha * alpha).sqrt();
        if root <= 2.0 * beta {
            let at = along_beta.points.partition_point(|p| p.0 < root);
            along_beta.points.insert(at, (root, nan_on_err(f3(a, r3, C64::from(root * root)))));
        }
        out.push(along_beta);
    }
    Ok(out)
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Amplification {
    pub alpha: f64,
    /// Effective squeezing `rT₁`, fixed at the one-photon optimum.
    pub x: f64,
    pub r: f64,
    pub t1: f64,
    pub fidelity: f64,
    pub probability: f64,
    /// Probability that four independent runs all succeed.
    pub probability_pow4: f64,
}

/// One-photon subtraction with a single number-resolving detector: fixes
/// `x = rT₁` at the optimal one-photon squeezing and maximizes the herald
/// probability over `T₁`.
pub fn amplification_comparison(alpha_small: f64) -> Result<Amplification, AnalyticsError> {
    let a = C64::from(alpha_small);
    let x = r1_opt(a)?;
    let p = |t1: f64| nan_on_err(single_photon_probability(x / t1, t1));
    let opt = maximize_1d(p, &Bracket::new(x + 1e-12, 1.0 - 1e-12, 1e-11)?)?;
    Ok(Amplification {
        alpha: alpha_small,
        x,
        r: x / opt.x,
        t1: opt.x,
        fidelity: f1(a, x)?,
        probability: opt.fx,
        probability_pow4: opt.fx.powi(4),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid_shape() {
        let g = default_alpha_grid();
        assert_eq!(g.len(), 97);
        assert_eq!(g[0], 0.2);
        assert_eq!(g[34], 1.9);
        assert_eq!(*g.last().unwrap(), 5.0);
        assert_eq!(alpha_grid(0.2, 5.0, 0.05).unwrap().len(), 97);
    }

    #[test]
    fn spec_validation() {
        assert!(SweepSpec::new(vec![], Scheme::OnePhoton).is_err());
        assert!(SweepSpec::new(vec![1.0, 1.0], Scheme::OnePhoton).is_err());
        assert!(SweepSpec::new(vec![0.1], Scheme::OnePhoton).is_err());
        assert!(SweepSpec::new(vec![1.0], Scheme::OnePhoton)
            .unwrap()
            .with_option("bogus", 1.0)
            .is_err());
    }

    #[test]
    fn rows_in_grid_order() {
        let spec = SweepSpec::new(vec![0.5, 1.0, 1.5, 2.0], Scheme::OnePhoton).unwrap();
        let rep = sweep(&spec);
        let alphas: Vec<f64> = rep.rows.iter().map(|r| r.alpha).collect();
        assert_eq!(alphas, vec![0.5, 1.0, 1.5, 2.0]);
        assert!(rep.rows.iter().all(|r| r.converged));
    }
}
