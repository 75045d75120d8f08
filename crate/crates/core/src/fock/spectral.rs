//! Memoized eigenbases of the two real tridiagonal generators used here.
//!
//! Both bases depend only on a dimension, never on a physical parameter, so
//! every beam splitter and displacement of a given size shares one
//! diagonalization.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Real orthogonal eigendecomposition `A = V diag(λ) Vᵀ`.
#[derive(Debug)]
pub(crate) struct RealEigen {
    pub values: DVector<f64>,
    pub vectors: DMatrix<f64>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
enum Generator {
    /// `a†b + ab†` restricted to total photon number n (dimension n + 1).
    BeamSplitterBlock,
    /// `a + a†` on a truncated basis of the given dimension.
    Quadrature,
}

type Slot = Arc<OnceLock<Arc<RealEigen>>>;

fn slot(kind: Generator, size: usize) -> Slot {
    static CACHE: OnceLock<Mutex<HashMap<(Generator, usize), Slot>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let mut map = cache.lock().expect("spectral cache poisoned");
    map.entry((kind, size)).or_default().clone()
}

fn diagonalize(m: DMatrix<f64>) -> RealEigen {
    let eig = SymmetricEigen::new(m);
    RealEigen {
        values: eig.eigenvalues,
        vectors: eig.eigenvectors,
    }
}

/// Eigenbasis of the number-conserving beam-splitter generator on the block
/// with `n` total photons. Basis index `k` is the state `|k⟩_a |n-k⟩_b`.
pub(crate) fn beam_splitter_block(n: usize) -> Arc<RealEigen> {
    slot(Generator::BeamSplitterBlock, n)
        .get_or_init(|| Arc::new(diagonalize(beam_splitter_generator(n))))
        .clone()
}

pub(crate) fn beam_splitter_generator(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n + 1, n + 1, |i, j| {
        // a†b maps k -> k+1 with amplitude sqrt((k+1)(n-k))
        let (lo, hi) = (i.min(j), i.max(j));
        if hi == lo + 1 {
            (((lo + 1) * (n - lo)) as f64).sqrt()
        } else {
            0.0
        }
    })
}

/// Eigenbasis of the truncated quadrature `a + a†` in dimension `dim`.
pub(crate) fn quadrature(dim: usize) -> Arc<RealEigen> {
    slot(Generator::Quadrature, dim)
        .get_or_init(|| {
            let m = DMatrix::from_fn(dim, dim, |i, j| {
                let (lo, hi) = (i.min(j), i.max(j));
                if hi == lo + 1 {
                    (hi as f64).sqrt()
                } else {
                    0.0
                }
            });
            Arc::new(diagonalize(m))
        })
        .clone()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_spectrum_is_n_minus_2j() {
        for n in [0usize, 1, 2, 7, 30] {
            let eig = beam_splitter_block(n);
            let mut vals: Vec<f64> = eig.values.iter().copied().collect();
            vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (j, v) in vals.iter().enumerate() {
                let expected = -(n as f64) + 2.0 * j as f64;
                assert!((v - expected).abs() < 1e-11, "n={n} j={j} {v}");
            }
        }
    }

    #[test]
    fn cached_basis_is_shared() {
        let a = quadrature(17);
        let b = quadrature(17);
        assert!(Arc::ptr_eq(&a, &b));
    }

    #[test]
    fn reconstruction() {
        let g = beam_splitter_generator(9);
        let eig = beam_splitter_block(9);
        let back = &eig.vectors * DMatrix::from_diagonal(&eig.values) * eig.vectors.transpose();
        assert!((back - g).abs().max() < 1e-12);
    }
}
