//! Truncated Fock-space states and the bosonic operations needed to build and
//! herald them: squeezed vacuum, cat and coherent states, annihilation,
//! displacement, the two-mode beam splitter and trigger detection.

mod cutoff;
mod ops;
mod spectral;
mod state;

use thiserror::Error;

pub use cutoff::{
    coherent_tail, displacement_padding, squeezed_cutoff, squeezed_tail, FockCutoff,
    MAX_DISCARDED, MIN_POLICY_CUTOFF, POLICY_TAIL,
};
pub use ops::{
    add_scaled, annihilate, apply_beam_splitter, beam_splitter, cat_state, coherent_state,
    condition_on_detection, detection_amplitudes, displace, displacement_matrix, fidelity,
    fidelity_mixed, infidelity, number_power, squeezed_vacuum, trace_distance, MAX_LEAKAGE,
};
pub use state::{
    Conditioned, DensityOperator, DetectorModel, Parity, PureState, TwoModeState, ZERO_NORM,
};

pub type C64 = num_complex::Complex64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FockError {
    #[error("invalid cutoff n_max = {0} (must be at least 1)")]
    InvalidCutoff(usize),
    #[error("truncation at n_max = {n_max} discards probability {discarded:e}")]
    TailTooLarge { discarded: f64, n_max: usize },
    #[error("operand has zero norm")]
    ZeroNorm,
    #[error("{0}")]
    Domain(String),
}
