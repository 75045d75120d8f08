use super::{run_circuit, CircuitSpec, CircuitStage, Result};
use crate::fock::{
    add_scaled, annihilate, apply_beam_splitter, cat_state, displace, displacement_padding,
    fidelity, fidelity_mixed, infidelity, squeezed_vacuum, trace_distance, Conditioned,
    DensityOperator, DetectorModel, FockCutoff, Parity, PureState, TwoModeState, C64,
};

/// Squeezing of the probe state used by [`displacement_limit_check`].
pub const LIMIT_CHECK_R: f64 = 0.5;

/// Reduced signal state after a beam splitter of transmissivity `tau` whose
/// other port is in vacuum.
fn lossy(psi: &PureState, tau: f64) -> Result<DensityOperator> {
    let vacuum = PureState::vacuum(FockCutoff::new(1)?);
    let joint = apply_beam_splitter(&TwoModeState::product(psi, &vacuum), tau)?;
    Ok(joint.trace_out_b().with_cutoff(psi.cutoff())?)
}

/// [`displacement_limit_check`] for a squeezed probe `|sq(r)⟩` on `cutoff`.
///
/// Mixing with a coherent ancilla `|φ⟩` equals, up to the ancilla's own
/// displacement, mixing with vacuum followed by `D(i√(1-τ)φ)` on the signal,
/// which keeps the computation finite for the huge `φ` of the limit.
pub fn displacement_limit_check_with(r: f64, phi: C64, tau: f64, cutoff: FockCutoff) -> Result<f64> {
    let psi = squeezed_vacuum(r, cutoff)?;
    let delta = C64::i() * (1.0 - tau).max(0.0).sqrt() * phi;
    let work = cutoff.padded(displacement_padding(delta.norm()));
    let mixed = if tau >= 1.0 {
        DensityOperator::from_pure(&psi)
    } else {
        lossy(&psi, tau)?
    };
    let mut m = nalgebra::DMatrix::<C64>::zeros(work.dim(), work.dim());
    for v in mixed.pure_components(super::COMPONENT_FLOOR) {
        let d = displace(&v.with_cutoff(work)?, delta)?;
        let a = d.amplitudes();
        m += a * a.adjoint();
    }
    let mixed = DensityOperator::from_matrix(m)?;
    let ideal = DensityOperator::from_pure(&displace(&psi.with_cutoff(work)?, delta)?);
    Ok(trace_distance(&mixed, &ideal)?)
}

/// Trace distance between a squeezed vacuum mixed with a coherent beam
/// `|φ⟩` on a transmissivity-`tau` beam splitter (ancilla traced out) and the
/// same state displaced by `i√(1-τ)φ`.
pub fn displacement_limit_check(phi: C64, tau: f64) -> Result<f64> {
    let cutoff = FockCutoff::for_squeezing(LIMIT_CHECK_R)?;
    displacement_limit_check_with(LIMIT_CHECK_R, phi, tau, cutoff)
}

/// Fidelity of an odd cat sent through a beam splitter of reflectivity
/// `reflectivity` (reflected mode discarded) with the original cat.
pub fn lossy_cat_fidelity(alpha: C64, reflectivity: f64, cutoff: FockCutoff) -> Result<f64> {
    let cat = cat_state(alpha, Parity::Odd, cutoff)?;
    let rho = lossy(&cat, 1.0 - reflectivity)?;
    Ok(fidelity_mixed(&rho, &cat)?)
}

/// Fidelity of the normalized `â|sq(r)⟩`, or of `(â² - β²)â|sq(r)⟩` when
/// `beta_sq` is given, with the odd cat, built directly on `cutoff`.
pub fn subtracted_fidelity(
    alpha: C64,
    r: f64,
    beta_sq: Option<C64>,
    cutoff: FockCutoff,
) -> Result<f64> {
    let sq = squeezed_vacuum(r, cutoff)?;
    let one = annihilate(&sq);
    let state = match beta_sq {
        None => one,
        Some(b2) => add_scaled(&annihilate(&annihilate(&one)), -b2, &one),
    };
    let cat = cat_state(alpha, Parity::Odd, cutoff)?;
    Ok(fidelity(&state, &cat)?)
}

/// Infidelity between one heralded tap of reflectivity `reflectivity` with
/// trigger displacement `i√R β` applied to `|sq(r)⟩`, and `(â + β)|sq(r)⟩`.
pub fn first_order_residual(r: f64, reflectivity: f64, beta: C64, cutoff: FockCutoff) -> Result<f64> {
    let stage = CircuitStage::subtracting(1.0 - reflectivity, beta, DetectorModel::NumberResolvingOne)?;
    let run = run_circuit(&CircuitSpec::new(r, vec![stage], cutoff)?)?;
    let sq = squeezed_vacuum(r, cutoff)?;
    let ideal = add_scaled(&annihilate(&sq), beta, &sq);
    let out = match &run.output {
        Conditioned::Pure(s) => s.clone(),
        Conditioned::Mixed(_) => unreachable!("number-resolving heralds stay pure"),
    };
    Ok(infidelity(&out, &ideal)?)
}

/// Reflectivities over which [`richardson_slopes`] measures convergence.
pub const RICHARDSON_R: [f64; 3] = [1e-3, 1e-4, 1e-5];

/// Decades of residual per decade of reflectivity between successive entries
/// of [`RICHARDSON_R`]; 2 for a residual of order `R²`.
pub fn richardson_slopes(r: f64, beta: C64, cutoff: FockCutoff) -> Result<[f64; 2]> {
    let e: Vec<f64> = RICHARDSON_R
        .iter()
        .map(|&big_r| first_order_residual(r, big_r, beta, cutoff))
        .collect::<Result<_>>()?;
    Ok([(e[0] / e[1]).log10(), (e[1] / e[2]).log10()])
}
