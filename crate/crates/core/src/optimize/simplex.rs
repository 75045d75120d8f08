use serde::{Deserialize, Serialize};

use super::OptimizeError;

/// Objective-evaluation budget of [`maximize_nd`].
pub const MAX_EVALUATIONS: usize = 2000;

/// Largest supported dimension.
pub const MAX_DIMENSION: usize = 4;

/// Gradient norm accepted as stationary.
pub const GRADIENT_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimumNd {
    pub x: Vec<f64>,
    pub fx: f64,
    pub evaluations: usize,
    /// Norm of the central-difference gradient at `x`, with per-coordinate
    /// step `1e-6 · scale`.
    pub gradient_norm: f64,
}

impl OptimumNd {
    pub fn is_stationary(&self) -> bool {
        self.gradient_norm < GRADIENT_TOL
    }
}

struct Counted<F> {
    f: F,
    calls: usize,
}

impl<F: Fn(&[f64]) -> f64> Counted<F> {
    /// Negated objective (the simplex minimizes); NaN counts as `+∞`.
    fn cost(&mut self, x: &[f64]) -> Result<f64, OptimizeError> {
        if self.calls >= MAX_EVALUATIONS {
            return Err(OptimizeError::NoConvergence {
                iterations: self.calls,
            });
        }
        self.calls += 1;
        let v = (self.f)(x);
        Ok(if v.is_nan() { f64::INFINITY } else { -v })
    }
}

/// Nelder–Mead maximization from `start`, with initial simplex edges `scales`.
///
/// The simplex collapses when its vertices agree to `1e-11` in scaled
/// coordinates or its values agree to rounding; it is then rebuilt around the
/// best vertex with edges a thousand times shorter, until a rebuild no longer
/// improves the optimum. NaN objective values count as `-∞`, which lets
/// callers express box constraints.
pub fn maximize_nd(
    f: impl Fn(&[f64]) -> f64,
    start: &[f64],
    scales: &[f64],
) -> Result<OptimumNd, OptimizeError> {
    let n = start.len();
    if n == 0 || n > MAX_DIMENSION || scales.len() != n {
        return Err(OptimizeError::Dimension(n));
    }
    let mut obj = Counted { f: &f, calls: 0 };
    let mut best_x = start.to_vec();
    let mut best_cost = obj.cost(&best_x)?;
    if best_cost == f64::INFINITY {
        return Err(OptimizeError::NonFinite);
    }
    let mut edge = 1.0;
    loop {
        let (x, c) = simplex_run(&mut obj, &best_x, scales, edge)?;
        let improved = c < best_cost - 1e-15 * best_cost.abs();
        if c <= best_cost {
            best_x = x;
            best_cost = c;
        }
        if !improved && edge < 1.0 {
            break;
        }
        edge = if improved && edge == 1.0 { 1e-2 } else { edge * 1e-3 };
        if edge < 1e-9 {
            break;
        }
    }
    let evaluations = obj.calls;
    let gradient_norm = gradient(&f, &best_x, scales)
        .iter()
        .map(|g| g * g)
        .sum::<f64>()
        .sqrt();
    Ok(OptimumNd {
        x: best_x,
        fx: -best_cost,
        evaluations,
        gradient_norm,
    })
}

/// Central-difference gradient with per-coordinate step `1e-6 · scale`.
pub fn gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], scales: &[f64]) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = 1e-6 * scales[i];
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

fn simplex_run<F: Fn(&[f64]) -> f64>(
    obj: &mut Counted<F>,
    start: &[f64],
    scales: &[f64],
    edge: f64,
) -> Result<(Vec<f64>, f64), OptimizeError> {
    let n = start.len();
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut vals: Vec<f64> = Vec::with_capacity(n + 1);
    pts.push(start.to_vec());
    vals.push(obj.cost(start)?);
    for i in 0..n {
        let mut p = start.to_vec();
        p[i] += edge * scales[i];
        vals.push(obj.cost(&p)?);
        pts.push(p);
    }

    loop {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        let pts_sorted: Vec<Vec<f64>> = order.iter().map(|&i| pts[i].clone()).collect();
        let vals_sorted: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
        pts = pts_sorted;
        vals = vals_sorted;

        let size = pts[1..]
            .iter()
            .flat_map(|p| p.iter().zip(&pts[0]).zip(scales).map(|((a, b), s)| ((a - b) / s).abs()))
            .fold(0.0, f64::max);
        let spread = vals[n] - vals[0];
        if size < 1e-11 || (spread.is_finite() && spread <= 4.0 * f64::EPSILON * vals[0].abs()) {
            return Ok((pts[0].clone(), vals[0]));
        }

        let centroid: Vec<f64> = (0..n)
            .map(|j| pts[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&pts[n])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let xr = along(1.0);
        let fr = obj.cost(&xr)?;
        if fr < vals[0] {
            let xe = along(2.0);
            let fe = obj.cost(&xe)?;
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
            continue;
        }
        if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < vals[n] {
            let xc = along(0.5);
            let fc = obj.cost(&xc)?;
            (xc, fc)
        } else {
            let xc = along(-0.5);
            let fc = obj.cost(&xc)?;
            (xc, fc)
        };
        if fc < vals[n].min(fr) {
            pts[n] = xc;
            vals[n] = fc;
            continue;
        }
        // shrink toward the best vertex
        for i in 1..=n {
            let p: Vec<f64> = pts[i]
                .iter()
                .zip(&pts[0])
                .map(|(x, b)| b + 0.5 * (x - b))
                .collect();
            vals[i] = obj.cost(&p)?;
            pts[i] = p;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let f = |v: &[f64]| -((v[0] - 0.2).powi(2) + (v[1] - 0.5).powi(2));
        let opt = maximize_nd(f, &[0.9, -0.3], &[0.1, 0.1]).unwrap();
        assert!((opt.x[0] - 0.2).abs() < 1e-8);
        assert!((opt.x[1] - 0.5).abs() < 1e-8);
        assert!(opt.is_stationary());
    }

    #[test]
    fn rosenbrock_within_budget() {
        let f = |v: &[f64]| -(100.0 * (v[1] - v[0] * v[0]).powi(2) + (1.0 - v[0]).powi(2));
        let opt = maximize_nd(f, &[-1.2, 1.0], &[0.5, 0.5]).unwrap();
        assert!((opt.x[0] - 1.0).abs() < 1e-6, "{:?}", opt);
        assert!(opt.evaluations <= MAX_EVALUATIONS);
    }

    #[test]
    fn box_constraint_through_nan() {
        let f = |v: &[f64]| if v[0] > 1.0 { f64::NAN } else { v[0] - v[1] * v[1] };
        let opt = maximize_nd(f, &[0.0, 0.3], &[0.2, 0.2]).unwrap();
        assert!((opt.x[0] - 1.0).abs() < 1e-8);
        assert!(opt.x[1].abs() < 1e-6);
    }

    #[test]
    fn dimension_limits() {
        let f = |_: &[f64]| 0.0;
        assert!(matches!(maximize_nd(f, &[], &[]), Err(OptimizeError::Dimension(0))));
        assert!(maximize_nd(f, &[0.0; 5], &[1.0; 5]).is_err());
    }

    #[test]
    fn infeasible_start() {
        assert!(matches!(
            maximize_nd(|_| f64::NAN, &[0.0], &[1.0]),
            Err(OptimizeError::NonFinite)
        ));
    }
}
