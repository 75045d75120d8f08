//! Deterministic maximizers and the parameter sweeps behind the figure data.

mod scalar;
mod simplex;
mod sweep;

use thiserror::Error;

pub use scalar::{
    central_derivative, find_root, maximize_1d, Bracket, Optimum1d, GRID_POINTS, MAX_ITERATIONS,
};
pub use sweep::{
    alpha_grid, amplification_comparison, default_alpha_grid, success_beta_params, sweep,
    tolerance_curves, Amplification, CurveAxis, OptimizationReport, ReportRow, Scheme, SweepSpec,
    ToleranceCurve, ALPHA_RANGE, CURVE_POINTS, STATIONARITY_TOL,
};
pub use simplex::{gradient, maximize_nd, OptimumNd, GRADIENT_TOL, MAX_DIMENSION, MAX_EVALUATIONS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizeError {
    #[error("no convergence after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("invalid bracket [{lo}, {hi}] with tolerance {tolerance}")]
    InvalidBracket { lo: f64, hi: f64, tolerance: f64 },
    #[error("objective is not finite anywhere it was sampled")]
    NonFinite,
    #[error("unsupported dimension {0}")]
    Dimension(usize),
    #[error("invalid sweep: {0}")]
    InvalidGrid(String),
    #[error("no sign change on [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },
}
