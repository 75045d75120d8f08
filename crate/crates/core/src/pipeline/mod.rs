//! Numerical simulation of the heralded subtraction circuit: weak beam-splitter
//! taps, displaced trigger modes and photon detection, carried out on
//! truncated Fock spaces.

mod limits;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::RealisticParams;
use crate::fock::{
    annihilate, apply_beam_splitter, condition_on_detection, number_power, squeezed_vacuum,
    Conditioned, DensityOperator, DetectorModel, FockCutoff, FockError, PureState, TwoModeState,
    C64,
};

pub use limits::{
    displacement_limit_check, displacement_limit_check_with, first_order_residual,
    lossy_cat_fidelity, richardson_slopes, subtracted_fidelity, LIMIT_CHECK_R, RICHARDSON_R,
};

/// Joint probabilities below this are treated as an impossible herald.
pub const ZERO_PROBABILITY: f64 = 1e-300;

/// Eigenvalues of a click-conditioned state below this fraction of its trace
/// are dropped when it is carried forward.
pub const COMPONENT_FLOOR: f64 = 1e-15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error("herald probability {0:e} is numerically zero")]
    ZeroProbability(f64),
    #[error("invalid circuit: {0}")]
    InvalidSpec(String),
}

pub type Result<T> = std::result::Result<T, PipelineError>;

/// One tap: beam splitter, displacement of the tapped mode, detector.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitStage {
    pub transmissivity: f64,
    pub trigger_displacement: C64,
    pub detector: DetectorModel,
}

impl CircuitStage {
    pub fn new(transmissivity: f64, trigger_displacement: C64, detector: DetectorModel) -> Result<Self> {
        if !(transmissivity > 0.0 && transmissivity < 1.0) {
            return Err(PipelineError::InvalidSpec(format!(
                "transmissivity {transmissivity} outside (0, 1)"
            )));
        }
        Ok(Self {
            transmissivity,
            trigger_displacement,
            detector,
        })
    }

    /// Tap whose heralded map is, to first order in `R = 1 - T`,
    /// proportional to `â + β`: the trigger is displaced by `i√R β`.
    pub fn subtracting(transmissivity: f64, beta: C64, detector: DetectorModel) -> Result<Self> {
        let gamma = C64::i() * (1.0 - transmissivity).sqrt() * beta;
        Self::new(transmissivity, gamma, detector)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitSpec {
    pub r: f64,
    pub stages: Vec<CircuitStage>,
    pub cutoff: FockCutoff,
}

impl CircuitSpec {
    pub fn new(r: f64, stages: Vec<CircuitStage>, cutoff: FockCutoff) -> Result<Self> {
        if !(0.0..1.0).contains(&r) {
            return Err(PipelineError::InvalidSpec(format!("r = {r} outside [0, 1)")));
        }
        if stages.is_empty() || stages.len() > 3 {
            return Err(PipelineError::InvalidSpec(format!(
                "{} stages; between 1 and 3 are supported",
                stages.len()
            )));
        }
        Ok(Self { r, stages, cutoff })
    }

    /// The three-tap circuit realizing `(â² - β²)â`: a bare tap, then taps
    /// displaced by `+i√R₂β` and `-i√R₃β`.
    pub fn three_photon(p: &RealisticParams, detector: DetectorModel, cutoff: FockCutoff) -> Result<Self> {
        let stages = vec![
            CircuitStage::subtracting(p.t1(), C64::default(), detector)?,
            CircuitStage::subtracting(p.t2(), p.beta(), detector)?,
            CircuitStage::subtracting(p.t3(), -p.beta(), detector)?,
        ];
        Self::new(p.r(), stages, cutoff)
    }

    pub fn with_detector(&self, detector: DetectorModel) -> Self {
        let mut out = self.clone();
        for s in &mut out.stages {
            s.detector = detector;
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    /// Normalized heralded state.
    pub output: Conditioned,
    pub probability: f64,
    pub per_stage_probabilities: Vec<f64>,
}

/// Unnormalized signal state, `Σ_j |v_j⟩⟨v_j|`; a single vector while every
/// herald so far was number resolving.
#[derive(Clone, Debug)]
struct Carried {
    components: Vec<PureState>,
    mixed: bool,
}

impl Carried {
    fn weight(&self) -> f64 {
        self.components.iter().map(PureState::norm_sq).sum()
    }
}

/// Heralds one tap on `psi`; the result lives on the cutoff of `psi`.
fn stage_on_vector(psi: &PureState, stage: &CircuitStage) -> Result<Conditioned> {
    let cutoff = psi.cutoff();
    let vacuum = PureState::vacuum(FockCutoff::new(1)?);
    let joint = apply_beam_splitter(&TwoModeState::product(psi, &vacuum), stage.transmissivity)?;
    let (cond, _) = condition_on_detection(&joint, stage.detector, stage.trigger_displacement)?;
    Ok(match cond {
        Conditioned::Pure(s) => Conditioned::Pure(s.with_cutoff(cutoff)?),
        Conditioned::Mixed(rho) => Conditioned::Mixed(rho.with_cutoff(cutoff)?),
    })
}

fn apply_stage(state: &Carried, stage: &CircuitStage) -> Result<Carried> {
    let mut pure = Vec::new();
    let mut rho: Option<DensityOperator> = None;
    for psi in &state.components {
        match stage_on_vector(psi, stage)? {
            Conditioned::Pure(s) => pure.push(s),
            Conditioned::Mixed(m) => {
                rho = Some(match rho {
                    None => m,
                    Some(acc) => DensityOperator::from_matrix(acc.matrix() + m.matrix())?,
                })
            }
        }
    }
    match rho {
        None => Ok(Carried {
            components: pure,
            mixed: state.mixed,
        }),
        Some(m) => Ok(Carried {
            components: m.pure_components(COMPONENT_FLOOR),
            mixed: true,
        }),
    }
}

/// Runs the circuit on `|sq(r)⟩` and returns the normalized heralded state
/// with its joint probability.
///
/// Number-resolving heralds keep the state pure; the first click detector
/// switches to a density-operator representation.
pub fn run_circuit(spec: &CircuitSpec) -> Result<RunResult> {
    if spec.stages.is_empty() || spec.stages.len() > 3 {
        return Err(PipelineError::InvalidSpec(format!("{} stages", spec.stages.len())));
    }
    let input = squeezed_vacuum(spec.r, spec.cutoff)?;
    let mut state = Carried {
        components: vec![input],
        mixed: false,
    };
    let mut per_stage = Vec::with_capacity(spec.stages.len());
    let mut weight = 1.0;
    for stage in &spec.stages {
        let next = apply_stage(&state, stage)?;
        let w = next.weight();
        if !(w >= ZERO_PROBABILITY) {
            return Err(PipelineError::ZeroProbability(w));
        }
        per_stage.push(w / weight);
        weight = w;
        state = next;
    }
    let output = if state.mixed {
        let dim = spec.cutoff.dim();
        let mut m = nalgebra::DMatrix::<C64>::zeros(dim, dim);
        for v in &state.components {
            let a = v.amplitudes();
            m += a * a.adjoint();
        }
        Conditioned::Mixed(DensityOperator::from_matrix(m)?.normalized()?)
    } else {
        Conditioned::Pure(state.components[0].normalized()?)
    };
    Ok(RunResult {
        output,
        probability: weight,
        per_stage_probabilities: per_stage,
    })
}

/// [`run_circuit`] with every detector replaced by a click detector.
pub fn run_circuit_apd(spec: &CircuitSpec) -> Result<RunResult> {
    run_circuit(&spec.with_detector(DetectorModel::ClickApd))
}

/// One heralded subtraction on `rho`: tap of reflectivity `reflectivity`,
/// trigger displaced by `i√R β`. Returns the normalized state and the herald
/// probability.
pub fn kraus_subtract(
    rho: &DensityOperator,
    reflectivity: f64,
    beta: C64,
    detector: DetectorModel,
) -> Result<(DensityOperator, f64)> {
    if !(reflectivity > 0.0 && reflectivity < 1.0) {
        return Err(PipelineError::InvalidSpec(format!(
            "reflectivity {reflectivity} outside (0, 1)"
        )));
    }
    let stage = CircuitStage::subtracting(1.0 - reflectivity, beta, detector)?;
    let input = Carried {
        components: rho.pure_components(COMPONENT_FLOOR),
        mixed: true,
    };
    let out = apply_stage(&input, &stage)?;
    let w = out.weight();
    if !(w >= ZERO_PROBABILITY) {
        return Err(PipelineError::ZeroProbability(w));
    }
    let dim = rho.cutoff().dim();
    let mut m = nalgebra::DMatrix::<C64>::zeros(dim, dim);
    for v in &out.components {
        let a = v.amplitudes();
        m += a * a.adjoint();
    }
    let p = w / rho.trace();
    Ok((DensityOperator::from_matrix(m)?.normalized()?, p))
}

/// `e^{c·â}|ψ⟩`, summed exactly: `â` is nilpotent on a truncated basis.
pub fn exp_annihilate(psi: &PureState, c: C64) -> PureState {
    let mut acc = psi.amplitudes().clone();
    let mut term = psi.clone();
    for k in 1..psi.cutoff().dim() {
        term = annihilate(&term).scaled(c / k as f64);
        if term.norm_sq() == 0.0 {
            break;
        }
        acc += term.amplitudes();
    }
    PureState::from_amplitudes(acc).expect("cutoff unchanged")
}

/// The unnormalized heralded state of the three-tap number-resolving circuit
/// in operator form,
/// `-i r₁r₂r₃/(t₁t₂²t₃³) e^{-(R₂+R₃)|β|²/2} e^{(R₃ - R₂/t₂)β*â/t₃}
/// (â² - t₂t₃²β² + (t₂-1)t₃βâ) â (t₁t₂t₃)^{n̂} |ψ⟩`,
/// whose squared norm is the joint herald probability.
pub fn closed_output(p: &RealisticParams, psi: &PureState) -> PureState {
    let (t1, t2, t3) = (p.t1().sqrt(), p.t2().sqrt(), p.t3().sqrt());
    let (r1, r2, r3) = ((1.0 - p.t1()).sqrt(), (1.0 - p.t2()).sqrt(), (1.0 - p.t3()).sqrt());
    let beta = p.beta();
    let v = number_power(psi, t1 * t2 * t3);
    let a1 = annihilate(&v);
    let a2 = annihilate(&a1);
    let a3 = annihilate(&a2);
    let mid = a3.amplitudes() - a1.amplitudes() * (t2 * t3 * t3 * beta * beta)
        + a2.amplitudes() * ((t2 - 1.0) * t3 * beta);
    let mid = PureState::from_amplitudes(mid).expect("cutoff unchanged");
    let c = (r3 * r3 - r2 * r2 / t2) * beta.conj() / t3;
    let out = exp_annihilate(&mid, c);
    let pre = -C64::i() * (r1 * r2 * r3 / (t1 * t2 * t2 * t3.powi(3)))
        * (-0.5 * (r2 * r2 + r3 * r3) * beta.norm_sqr()).exp();
    out.scaled(pre)
}
