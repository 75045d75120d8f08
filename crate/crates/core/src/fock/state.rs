use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{FockCutoff, FockError, C64};

/// Below this squared norm a state is treated as the zero vector.
pub const ZERO_NORM: f64 = 1e-30;

/// Amplitude vector over a truncated single-mode Fock basis.
///
/// States are not required to be normalized: a post-selected state keeps the
/// branch probability in its squared norm.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    cutoff: FockCutoff,
    amplitudes: DVector<C64>,
    norm_sq: f64,
}

impl PureState {
    pub fn from_amplitudes(amplitudes: DVector<C64>) -> Result<Self, FockError> {
        let cutoff = FockCutoff::new(amplitudes.len().saturating_sub(1))?;
        let norm_sq = amplitudes.norm_squared();
        Ok(Self {
            cutoff,
            amplitudes,
            norm_sq,
        })
    }

    pub fn from_vec(amplitudes: Vec<C64>) -> Result<Self, FockError> {
        Self::from_amplitudes(DVector::from_vec(amplitudes))
    }

    /// Number state `|n⟩`.
    pub fn fock(n: usize, cutoff: FockCutoff) -> Result<Self, FockError> {
        if n > cutoff.n_max() {
            return Err(FockError::Domain(format!(
                "Fock level {n} above cutoff {cutoff}"
            )));
        }
        let mut v = DVector::zeros(cutoff.dim());
        v[n] = C64::new(1.0, 0.0);
        Self::from_amplitudes(v)
    }

    pub fn vacuum(cutoff: FockCutoff) -> Self {
        Self::fock(0, cutoff).expect("vacuum fits every cutoff")
    }

    pub fn cutoff(&self) -> FockCutoff {
        self.cutoff
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> DVector<C64> {
        self.amplitudes
    }

    pub fn amplitude(&self, n: usize) -> C64 {
        self.amplitudes.get(n).copied().unwrap_or_default()
    }

    pub fn norm_sq(&self) -> f64 {
        self.norm_sq
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sq - 1.0).abs() < 1e-10
    }

    pub fn normalized(&self) -> Result<Self, FockError> {
        if self.norm_sq < ZERO_NORM {
            return Err(FockError::ZeroNorm);
        }
        Self::from_amplitudes(&self.amplitudes / C64::from(self.norm_sq.sqrt()))
    }

    pub fn scaled(&self, factor: C64) -> Self {
        Self::from_amplitudes(&self.amplitudes * factor).expect("cutoff unchanged")
    }

    /// Same state on a different cutoff. Growing zero-pads; shrinking fails
    /// unless the dropped amplitudes carry less than `1e-12` of the weight.
    pub fn with_cutoff(&self, cutoff: FockCutoff) -> Result<Self, FockError> {
        let dim = cutoff.dim();
        if dim < self.amplitudes.len() {
            let dropped: f64 = self.amplitudes.rows_range(dim..).norm_squared();
            if dropped > super::MAX_DISCARDED * self.norm_sq.max(ZERO_NORM) {
                return Err(FockError::TailTooLarge {
                    discarded: dropped,
                    n_max: cutoff.n_max(),
                });
            }
        }
        let v = DVector::from_fn(dim, |i, _| self.amplitude(i));
        Self::from_amplitudes(v)
    }

    /// `⟨self|other⟩`, zero-padding the shorter operand.
    pub fn inner(&self, other: &Self) -> C64 {
        self.amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Mean photon number `⟨n̂⟩` divided by the squared norm.
    pub fn mean_photon_number(&self) -> f64 {
        let total: f64 = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(n, a)| n as f64 * a.norm_sqr())
            .sum();
        total / self.norm_sq
    }

    /// Total squared amplitude on levels with the given parity
    /// (`0` even, `1` odd).
    pub fn parity_weight(&self, parity: usize) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(n, _)| n % 2 == parity % 2)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }
}

/// Hermitian positive-semidefinite operator on a truncated Fock basis. A
/// trace below one is the probability of the branch that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    cutoff: FockCutoff,
    matrix: DMatrix<C64>,
    trace: f64,
}

impl DensityOperator {
    /// Entrywise Hermiticity tolerance.
    pub const HERMITIAN_TOL: f64 = 1e-10;

    pub fn from_matrix(matrix: DMatrix<C64>) -> Result<Self, FockError> {
        if !matrix.is_square() {
            return Err(FockError::Domain("density matrix must be square".into()));
        }
        let cutoff = FockCutoff::new(matrix.nrows().saturating_sub(1))?;
        let skew = (&matrix - matrix.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if skew > Self::HERMITIAN_TOL {
            return Err(FockError::Domain(format!(
                "matrix is not Hermitian (max |ρ - ρ†| = {skew:e})"
            )));
        }
        let matrix = (&matrix + matrix.adjoint()) * C64::from(0.5);
        let trace = matrix.trace().re;
        Ok(Self {
            cutoff,
            matrix,
            trace,
        })
    }

    /// `|ψ⟩⟨ψ|`, keeping the squared norm as the trace.
    pub fn from_pure(state: &PureState) -> Self {
        let v = state.amplitudes();
        let matrix = v * v.adjoint();
        Self {
            cutoff: state.cutoff(),
            trace: state.norm_sq(),
            matrix,
        }
    }

    /// `Σ_j |v_j⟩⟨v_j|` over the columns of `columns`.
    pub(crate) fn from_columns(columns: &DMatrix<C64>) -> Result<Self, FockError> {
        let matrix = columns * columns.adjoint();
        Self::from_matrix(matrix)
    }

    pub fn cutoff(&self) -> FockCutoff {
        self.cutoff
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.trace
    }

    pub fn normalized(&self) -> Result<Self, FockError> {
        if self.trace < ZERO_NORM {
            return Err(FockError::ZeroNorm);
        }
        Self::from_matrix(&self.matrix / C64::from(self.trace))
    }

    pub fn with_cutoff(&self, cutoff: FockCutoff) -> Result<Self, FockError> {
        let dim = cutoff.dim();
        let old = self.matrix.nrows();
        if dim < old {
            let dropped: f64 = (dim..old).map(|i| self.matrix[(i, i)].re).sum();
            if dropped > super::MAX_DISCARDED * self.trace.max(ZERO_NORM) {
                return Err(FockError::TailTooLarge {
                    discarded: dropped,
                    n_max: cutoff.n_max(),
                });
            }
        }
        let m = DMatrix::from_fn(dim, dim, |i, j| {
            if i < old && j < old {
                self.matrix[(i, j)]
            } else {
                C64::default()
            }
        });
        Self::from_matrix(m)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = SymmetricEigen::new(self.matrix.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Eigen-decomposition `ρ = Σ λ_j |e_j⟩⟨e_j|`, returned as the
    /// unnormalized vectors `√λ_j |e_j⟩` for every `λ_j` above
    /// `rel_floor · tr ρ`.
    pub fn pure_components(&self, rel_floor: f64) -> Vec<PureState> {
        let eig = SymmetricEigen::new(self.matrix.clone());
        let floor = rel_floor * self.trace.abs();
        eig.eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > floor && l > 0.0)
            .map(|(j, &l)| {
                let v = eig.eigenvectors.column(j) * C64::from(l.sqrt());
                PureState::from_amplitudes(v.into_owned()).expect("same cutoff")
            })
            .collect()
    }

    pub fn expectation(&self, state: &PureState) -> C64 {
        let dim = self.matrix.nrows();
        let v = DVector::from_fn(dim, |i, _| state.amplitude(i));
        (v.adjoint() * &self.matrix * &v)[(0, 0)]
    }
}

/// Amplitudes over a pair of truncated Fock bases, indexed `(n_a, n_b)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoModeState {
    cutoff_a: FockCutoff,
    cutoff_b: FockCutoff,
    amplitudes: DMatrix<C64>,
}

impl TwoModeState {
    pub fn from_matrix(amplitudes: DMatrix<C64>) -> Result<Self, FockError> {
        let cutoff_a = FockCutoff::new(amplitudes.nrows().saturating_sub(1))?;
        let cutoff_b = FockCutoff::new(amplitudes.ncols().saturating_sub(1))?;
        Ok(Self {
            cutoff_a,
            cutoff_b,
            amplitudes,
        })
    }

    /// `|a⟩ ⊗ |b⟩`.
    pub fn product(a: &PureState, b: &PureState) -> Self {
        let amplitudes = a.amplitudes() * b.amplitudes().transpose();
        Self {
            cutoff_a: a.cutoff(),
            cutoff_b: b.cutoff(),
            amplitudes,
        }
    }

    pub fn cutoff_a(&self) -> FockCutoff {
        self.cutoff_a
    }

    pub fn cutoff_b(&self) -> FockCutoff {
        self.cutoff_b
    }

    pub fn amplitudes(&self) -> &DMatrix<C64> {
        &self.amplitudes
    }

    pub fn amplitude(&self, n_a: usize, n_b: usize) -> C64 {
        self.amplitudes.get((n_a, n_b)).copied().unwrap_or_default()
    }

    /// Squared Frobenius norm.
    pub fn norm_sq(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    /// Unnormalized mode-a state `⟨m|_b |Ψ⟩`.
    pub fn project_b(&self, m: usize) -> Result<PureState, FockError> {
        if m > self.cutoff_b.n_max() {
            return Err(FockError::Domain(format!(
                "projection onto |{m}⟩ beyond cutoff {}",
                self.cutoff_b
            )));
        }
        PureState::from_amplitudes(self.amplitudes.column(m).into_owned())
    }

    /// Reduced state of mode a.
    pub fn trace_out_b(&self) -> DensityOperator {
        DensityOperator::from_columns(&self.amplitudes).expect("Gram matrix is Hermitian")
    }

    /// Squared weight per total photon number `n_a + n_b`.
    pub fn block_weights(&self) -> Vec<f64> {
        let (ra, rb) = self.amplitudes.shape();
        let mut w = vec![0.0; ra + rb - 1];
        for i in 0..ra {
            for j in 0..rb {
                w[i + j] += self.amplitudes[(i, j)].norm_sqr();
            }
        }
        w
    }
}

/// Which-photon-number detector model heralds a stage.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorModel {
    /// Projects the trigger onto exactly one photon.
    NumberResolvingOne,
    /// Clicks on any nonzero photon number.
    ClickApd,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Odd,
    Even,
}

/// Output of a heralded measurement: pure for number-resolving detection,
/// mixed for click detection. The squared norm (trace) is the branch weight.
#[derive(Clone, Debug, PartialEq)]
pub enum Conditioned {
    Pure(PureState),
    Mixed(DensityOperator),
}

impl Conditioned {
    pub fn weight(&self) -> f64 {
        match self {
            Self::Pure(s) => s.norm_sq(),
            Self::Mixed(rho) => rho.trace(),
        }
    }

    pub fn cutoff(&self) -> FockCutoff {
        match self {
            Self::Pure(s) => s.cutoff(),
            Self::Mixed(rho) => rho.cutoff(),
        }
    }

    pub fn to_density(&self) -> DensityOperator {
        match self {
            Self::Pure(s) => DensityOperator::from_pure(s),
            Self::Mixed(rho) => rho.clone(),
        }
    }

    /// Fidelity against a pure target.
    pub fn fidelity_with(&self, target: &PureState) -> Result<f64, FockError> {
        match self {
            Self::Pure(s) => super::fidelity(s, target),
            Self::Mixed(rho) => super::fidelity_mixed(rho, target),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn norm_is_cached_and_padding_preserves_it() {
        let s = PureState::from_vec(vec![c(0.6), C64::new(0.0, 0.8)]).unwrap();
        assert!((s.norm_sq() - 1.0).abs() < 1e-15);
        let big = s.with_cutoff(FockCutoff::new(9).unwrap()).unwrap();
        assert_eq!(big.amplitudes().len(), 10);
        assert_eq!(big.norm_sq(), s.norm_sq());
    }

    #[test]
    fn shrinking_refuses_to_drop_weight() {
        let s = PureState::from_vec(vec![c(0.6), c(0.0), c(0.8)]).unwrap();
        assert!(matches!(
            s.with_cutoff(FockCutoff::new(1).unwrap()),
            Err(FockError::TailTooLarge { .. })
        ));
    }

    #[test]
    fn density_rejects_non_hermitian() {
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.5), c(0.0), c(0.0)]);
        assert!(DensityOperator::from_matrix(m).is_err());
    }

    #[test]
    fn pure_components_rebuild_the_operator() {
        let a = PureState::from_vec(vec![c(0.6), C64::new(0.0, 0.8), c(0.0)]).unwrap();
        let b = PureState::from_vec(vec![c(0.0), c(0.3), c(0.4)]).unwrap();
        let m = DensityOperator::from_pure(&a).matrix() + DensityOperator::from_pure(&b).matrix();
        let rho = DensityOperator::from_matrix(m).unwrap();
        let parts = rho.pure_components(0.0);
        let mut back = DMatrix::zeros(3, 3);
        for p in &parts {
            back += DensityOperator::from_pure(p).matrix();
        }
        assert!((back - rho.matrix()).iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn product_trace_out() {
        let a = PureState::from_vec(vec![c(0.6), c(0.8)]).unwrap();
        let b = PureState::from_vec(vec![c(0.0), c(1.0), c(0.0)]).unwrap();
        let joint = TwoModeState::product(&a, &b);
        assert!((joint.norm_sq() - 1.0).abs() < 1e-15);
        let rho = joint.trace_out_b();
        assert!((rho.matrix()[(0, 1)] - c(0.48)).norm() < 1e-15);
        assert_eq!(joint.block_weights().len(), 4);
    }
}
