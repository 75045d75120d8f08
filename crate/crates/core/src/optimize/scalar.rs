use serde::{Deserialize, Serialize};

use super::OptimizeError;

/// Golden-section iteration cap.
pub const MAX_ITERATIONS: usize = 200;

/// Points in the basin-selection scan that precedes golden-section search.
pub const GRID_POINTS: usize = 64;

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Closed search interval with an argmax tolerance.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    lo: f64,
    hi: f64,
    tolerance: f64,
}

impl Bracket {
    pub fn new(lo: f64, hi: f64, tolerance: f64) -> Result<Self, OptimizeError> {
        if !(lo < hi) || !(tolerance > 0.0) || !lo.is_finite() || !hi.is_finite() {
            return Err(OptimizeError::InvalidBracket { lo, hi, tolerance });
        }
        Ok(Self { lo, hi, tolerance })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Optimum1d {
    pub x: f64,
    pub fx: f64,
    pub iterations: usize,
}

fn value(f: &impl Fn(f64) -> f64, x: f64) -> f64 {
    let v = f(x);
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

/// Maximizes `f` on `bracket`.
///
/// A 64-point scan picks the basin, golden-section search narrows it to the
/// bracket tolerance, and, when the central-difference derivative changes
/// sign around the result, bisection on that derivative pins the stationary
/// point below the resolution golden-section can reach on a flat maximum.
/// Non-finite values count as `-∞`.
pub fn maximize_1d(f: impl Fn(f64) -> f64, bracket: &Bracket) -> Result<Optimum1d, OptimizeError> {
    let (lo, hi, tol) = (bracket.lo, bracket.hi, bracket.tolerance);
    let step = (hi - lo) / (GRID_POINTS - 1) as f64;
    let grid = |i: usize| if i + 1 == GRID_POINTS { hi } else { lo + step * i as f64 };
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for i in 0..GRID_POINTS {
        let v = value(&f, grid(i));
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    if best_v == f64::NEG_INFINITY {
        return Err(OptimizeError::NonFinite);
    }
    let mut a = grid(best.saturating_sub(1));
    let mut b = grid((best + 1).min(GRID_POINTS - 1));

    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = value(&f, c);
    let mut fd = value(&f, d);
    let mut iterations = 0;
    while b - a > tol {
        if iterations == MAX_ITERATIONS {
            return Err(OptimizeError::NoConvergence { iterations });
        }
        iterations += 1;
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = value(&f, c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = value(&f, d);
        }
    }
    let mut x = 0.5 * (a + b);
    let mut fx = value(&f, x);
    // the grid point itself may beat the golden interior on an endpoint max
    if best_v > fx {
        x = grid(best);
        fx = best_v;
    }

    if let Some((xp, n)) = polish(&f, x, lo, hi, tol) {
        let fp = value(&f, xp);
        if fp >= fx - 1e-14 * fx.abs().max(1e-300) {
            x = xp;
            fx = fp;
        }
        iterations += n;
    }
    Ok(Optimum1d { x, fx, iterations })
}

/// Central-difference derivative with step `h`.
pub fn central_derivative(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

fn polish(
    f: &impl Fn(f64) -> f64,
    x: f64,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Option<(f64, usize)> {
    let span = hi - lo;
    let h = 1e-5 * span;
    let reach = (10.0 * tol).max(1e-6 * span);
    let mut a = (x - reach).max(lo + h);
    let mut b = (x + reach).min(hi - h);
    if !(a < b) {
        return None;
    }
    let d = |t: f64| (value(f, t + h) - value(f, t - h)) / (2.0 * h);
    let (da, db) = (d(a), d(b));
    if !(da > 0.0 && db < 0.0) {
        return None;
    }
    let mut n = 0;
    while b - a > 1e-15 * span.max(x.abs()) && n < 100 {
        n += 1;
        let m = 0.5 * (a + b);
        if d(m) > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    Some((0.5 * (a + b), n))
}

/// Bisection for a sign change of `f` on `[lo, hi]`, to width `tol`.
pub fn find_root(
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<f64, OptimizeError> {
    let (mut a, mut b) = (lo, hi);
    let (fa, fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if !(fa.signum() != fb.signum()) || fa.is_nan() || fb.is_nan() {
        return Err(OptimizeError::NoSignChange { lo, hi });
    }
    let mut iterations = 0;
    while b - a > tol {
        if iterations == 400 {
            return Err(OptimizeError::NoConvergence { iterations });
        }
        iterations += 1;
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_peak() {
        let b = Bracket::new(0.0, 1.0, 1e-10).unwrap();
        let opt = maximize_1d(|x| -(x - 0.3) * (x - 0.3), &b).unwrap();
        assert!((opt.x - 0.3).abs() < 1e-10);
        assert!(opt.iterations <= MAX_ITERATIONS + 100);
    }

    #[test]
    fn endpoint_maximum() {
        let b = Bracket::new(0.0, 2.0, 1e-9).unwrap();
        let opt = maximize_1d(|x| x, &b).unwrap();
        assert!((opt.x - 2.0).abs() < 1e-9);
    }

    #[test]
    fn grid_picks_the_taller_basin() {
        // local max at 0.2 (height 1), global at 0.8 (height 2)
        let f = |x: f64| (-(x - 0.2f64).powi(2) * 400.0).exp() + 2.0 * (-(x - 0.8f64).powi(2) * 400.0).exp();
        let b = Bracket::new(0.0, 1.0, 1e-10).unwrap();
        let opt = maximize_1d(f, &b).unwrap();
        assert!((opt.x - 0.8).abs() < 1e-8);
    }

    #[test]
    fn nan_regions_are_skipped() {
        let f = |x: f64| if x < 0.5 { f64::NAN } else { -(x - 0.7) * (x - 0.7) };
        let opt = maximize_1d(f, &Bracket::new(0.0, 1.0, 1e-10).unwrap()).unwrap();
        assert!((opt.x - 0.7).abs() < 1e-9);
        assert!(matches!(
            maximize_1d(|_| f64::NAN, &Bracket::new(0.0, 1.0, 1e-10).unwrap()),
            Err(OptimizeError::NonFinite)
        ));
    }

    #[test]
    fn iteration_cap() {
        let b = Bracket::new(0.0, 1.0, 1e-300).unwrap();
        assert!(matches!(
            maximize_1d(|x| -(x - 0.3) * (x - 0.3), &b),
            Err(OptimizeError::NoConvergence { .. })
        ));
    }

    #[test]
    fn invalid_bracket() {
        assert!(Bracket::new(1.0, 0.0, 1e-3).is_err());
        assert!(Bracket::new(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn root_finding() {
        let r = find_root(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
        assert!(find_root(|x| x * x + 1.0, 0.0, 2.0, 1e-14).is_err());
    }
}
