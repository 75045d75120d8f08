use nalgebra::{DMatrix, DVector};

use super::cutoff::{coherent_tail, displacement_padding, squeezed_tail, MAX_DISCARDED};
use super::spectral;
use super::{
    Conditioned, DensityOperator, DetectorModel, FockCutoff, FockError, Parity, PureState,
    TwoModeState, C64, ZERO_NORM,
};

/// Leakage a displacement may push past the working basis.
pub const MAX_LEAKAGE: f64 = 1e-10;

fn check_squeezing(r: f64) -> Result<(), FockError> {
    if !(0.0..1.0).contains(&r) || !r.is_finite() {
        return Err(FockError::Domain(format!("squeezing r = {r} outside [0, 1)")));
    }
    Ok(())
}

fn renormalized(v: DVector<C64>, discarded: f64, n_max: usize) -> Result<PureState, FockError> {
    if discarded >= MAX_DISCARDED {
        return Err(FockError::TailTooLarge { discarded, n_max });
    }
    PureState::from_amplitudes(v)?.normalized()
}

/// Single-mode squeezed vacuum,
/// `(1-r²)^{1/4} Σ_n √((2n)!/(2^{2n} n!²)) rⁿ |2n⟩`.
pub fn squeezed_vacuum(r: f64, cutoff: FockCutoff) -> Result<PureState, FockError> {
    check_squeezing(r)?;
    let mut v = DVector::zeros(cutoff.dim());
    let mut c = (1.0 - r * r).powf(0.25);
    let mut n = 0usize;
    while 2 * n <= cutoff.n_max() {
        v[2 * n] = C64::new(c, 0.0);
        c *= r * ((2 * n + 1) as f64 / (2 * n + 2) as f64).sqrt();
        n += 1;
    }
    renormalized(v, squeezed_tail(r, cutoff.n_max()), cutoff.n_max())
}

/// Coherent state `|α⟩`.
pub fn coherent_state(alpha: C64, cutoff: FockCutoff) -> Result<PureState, FockError> {
    let mut v = DVector::zeros(cutoff.dim());
    let mut c = C64::from((-alpha.norm_sqr() / 2.0).exp());
    for n in 0..cutoff.dim() {
        if n > 0 {
            c *= alpha / (n as f64).sqrt();
        }
        v[n] = c;
    }
    renormalized(v, coherent_tail(alpha.norm(), cutoff.n_max()), cutoff.n_max())
}

/// Even or odd cat state `(|α⟩ ± |-α⟩) / √(2(1 ± e^{-2|α|²}))`.
///
/// Amplitudes are generated directly on the surviving parity, so the small-α
/// odd cat converges to `|1⟩` without cancellation.
pub fn cat_state(alpha: C64, parity: Parity, cutoff: FockCutoff) -> Result<PureState, FockError> {
    let a2 = alpha.norm_sqr();
    let (keep, norm_sq) = match parity {
        Parity::Odd => {
            if a2 == 0.0 {
                return Err(FockError::Domain("odd cat state needs alpha != 0".into()));
            }
            (1usize, -2.0 * (-2.0 * a2).exp_m1())
        }
        Parity::Even => (0usize, 2.0 * (1.0 + (-2.0 * a2).exp())),
    };
    let scale = 2.0 / norm_sq.sqrt();
    let mut v = DVector::zeros(cutoff.dim());
    let mut c = C64::from((-a2 / 2.0).exp());
    let mut discarded = 0.0;
    let mut n = 0usize;
    loop {
        if n > 0 {
            c *= alpha / (n as f64).sqrt();
        }
        if n % 2 == keep {
            let amp = c * scale;
            if n <= cutoff.n_max() {
                v[n] = amp;
            } else {
                discarded += amp.norm_sqr();
                if amp.norm_sqr() <= 1e-30 * discarded.max(1e-300) && n as f64 > 2.0 * a2 {
                    break;
                }
            }
        }
        if n > cutoff.n_max() && (c.norm_sqr() == 0.0) {
            break;
        }
        n += 1;
    }
    renormalized(v, discarded, cutoff.n_max())
}

/// `â|ψ⟩`, unnormalized: the squared norm of the result is `⟨ψ|n̂|ψ⟩`.
pub fn annihilate(state: &PureState) -> PureState {
    let a = state.amplitudes();
    let dim = a.len();
    let v = DVector::from_fn(dim, |n, _| {
        if n + 1 < dim {
            a[n + 1] * ((n + 1) as f64).sqrt()
        } else {
            C64::default()
        }
    });
    PureState::from_amplitudes(v).expect("cutoff unchanged")
}

/// `t^{n̂}|ψ⟩`: scales level n by `tⁿ`.
pub fn number_power(state: &PureState, t: f64) -> PureState {
    let mut f = 1.0;
    let v = state.amplitudes().map(|a| {
        let out = a * f;
        f *= t;
        out
    });
    PureState::from_amplitudes(v).expect("cutoff unchanged")
}

/// `|a⟩ + coeff |b⟩`, on the larger of the two cutoffs.
pub fn add_scaled(a: &PureState, coeff: C64, b: &PureState) -> PureState {
    let dim = a.amplitudes().len().max(b.amplitudes().len());
    let v = DVector::from_fn(dim, |n, _| a.amplitude(n) + coeff * b.amplitude(n));
    PureState::from_amplitudes(v).expect("nonempty")
}

/// Matrix of `exp(βa† - β*a)` on a basis of dimension `dim`, computed by
/// exponentiating the truncated generator.
///
/// The generator is a rotated quadrature,
/// `βa† - β*a = -i|β| R X R†` with `X = a + a†` and `R = e^{i(arg β + π/2) n̂}`,
/// so one cached diagonalization of `X` serves every β.
/// Entries near the edge of the basis carry truncation error; callers keep
/// `displacement_padding(|β|)` levels of headroom.
pub fn displacement_matrix(beta: C64, dim: usize) -> DMatrix<C64> {
    if beta.norm() == 0.0 {
        return DMatrix::identity(dim, dim);
    }
    let eig = spectral::quadrature(dim);
    let mag = beta.norm();
    let theta = beta.arg() + std::f64::consts::FRAC_PI_2;
    let phases: Vec<C64> = eig.values.iter().map(|&mu| C64::from_polar(1.0, -mag * mu)).collect();
    let v = &eig.vectors;
    // exp(-i|β|X) = V diag(e^{-i|β|μ}) Vᵀ
    let weighted = DMatrix::from_fn(dim, dim, |i, j| phases[j] * v[(i, j)]);
    let v_c = v.map(C64::from);
    let core = weighted * v_c.transpose();
    let rot: Vec<C64> = (0..dim).map(|n| C64::from_polar(1.0, theta * n as f64)).collect();
    DMatrix::from_fn(dim, dim, |m, k| rot[m] * core[(m, k)] * rot[k].conj())
}

/// `D(β)|ψ⟩` on the input cutoff.
///
/// The product is formed in a working basis padded by
/// `2·displacement_padding(|β|)` levels; weight pushed above the input cutoff
/// is an error once it reaches `1e-10` of the norm.
pub fn displace(state: &PureState, beta: C64) -> Result<PureState, FockError> {
    if beta.norm() == 0.0 {
        return Ok(state.clone());
    }
    let dim = state.cutoff().dim();
    let work = dim + 2 * displacement_padding(beta.norm());
    let d = displacement_matrix(beta, work);
    let y = d.columns(0, dim) * state.amplitudes();
    let leaked = y.rows_range(dim..).norm_squared();
    if leaked >= MAX_LEAKAGE * state.norm_sq().max(ZERO_NORM) {
        return Err(FockError::TailTooLarge {
            discarded: leaked,
            n_max: state.cutoff().n_max(),
        });
    }
    PureState::from_amplitudes(y.rows(0, dim).into_owned())
}

fn check_transmissivity(t: f64) -> Result<(), FockError> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(FockError::Domain(format!(
            "transmissivity T = {t} outside (0, 1]"
        )));
    }
    Ok(())
}

/// Beam splitter `exp(i·atan(√((1-T)/T))·(a†b + ab†))` acting on `|a⟩⊗|b⟩`.
///
/// See [`apply_beam_splitter`].
pub fn beam_splitter(a: &PureState, b: &PureState, t: f64) -> Result<TwoModeState, FockError> {
    check_transmissivity(t)?;
    apply_beam_splitter(&TwoModeState::product(a, b), t)
}

/// Applies the beam splitter to an arbitrary two-mode state.
///
/// The generator conserves `n_a + n_b`, so the unitary is exponentiated
/// exactly on each `(n+1)`-dimensional block. Both output axes are sized for
/// the largest total photon number present, `N_a + N_b`, so nothing is
/// truncated.
pub fn apply_beam_splitter(joint: &TwoModeState, t: f64) -> Result<TwoModeState, FockError> {
    check_transmissivity(t)?;
    let na = joint.cutoff_a().n_max();
    let nb = joint.cutoff_b().n_max();
    let total = na + nb;
    let theta = ((1.0 - t) / t).sqrt().atan();
    let input = joint.amplitudes();
    let mut out = DMatrix::<C64>::zeros(total + 1, total + 1);
    let mut x = Vec::with_capacity(total + 1);
    for n in 0..=total {
        // nonzero inputs of block n: (k, x_k) with k photons in mode a
        x.clear();
        for k in n.saturating_sub(nb)..=n.min(na) {
            let amp = input[(k, n - k)];
            if amp.norm_sqr() != 0.0 {
                x.push((k, amp));
            }
        }
        if x.is_empty() {
            continue;
        }
        let eig = spectral::beam_splitter_block(n);
        let v = &eig.vectors;
        for j in 0..=n {
            let proj: C64 = x.iter().map(|&(k, amp)| amp * v[(k, j)]).sum();
            if proj.norm_sqr() == 0.0 {
                continue;
            }
            let coeff = proj * C64::from_polar(1.0, theta * eig.values[j]);
            for k in 0..=n {
                out[(k, n - k)] += coeff * v[(k, j)];
            }
        }
    }
    TwoModeState::from_matrix(out)
}

/// Heralds mode b of `joint`: displaces it by `displace_trigger`, then detects.
///
/// Returns the unnormalized conditional state of mode a and its weight. For
/// [`DetectorModel::NumberResolvingOne`] this is `⟨1|_b D_b(γ)|Ψ⟩`; for
/// [`DetectorModel::ClickApd`] it is `Σ_{m≥1} ⟨m|_b D_b(γ)|Ψ⟩⟨Ψ|D_b(γ)†|m⟩_b`.
pub fn condition_on_detection(
    joint: &TwoModeState,
    detector: DetectorModel,
    displace_trigger: C64,
) -> Result<(Conditioned, f64), FockError> {
    let outcomes = detection_amplitudes(joint, displace_trigger)?;
    let out = match detector {
        DetectorModel::NumberResolvingOne => {
            Conditioned::Pure(PureState::from_amplitudes(outcomes.column(1).into_owned())?)
        }
        DetectorModel::ClickApd => {
            let clicks = outcomes.columns(1, outcomes.ncols() - 1).into_owned();
            Conditioned::Mixed(DensityOperator::from_columns(&clicks)?)
        }
    };
    let p = out.weight();
    Ok((out, p))
}

/// Matrix whose column m is `⟨m|_b D_b(γ)|Ψ⟩`, for every trigger outcome that
/// carries weight. Fails if more than `1e-10` of the norm falls outside the
/// returned outcomes.
pub fn detection_amplitudes(joint: &TwoModeState, gamma: C64) -> Result<DMatrix<C64>, FockError> {
    let psi = joint.amplitudes();
    let nb = joint.cutoff_b().n_max();
    if gamma.norm() == 0.0 {
        return Ok(psi.clone());
    }
    let pad = displacement_padding(gamma.norm());
    let rows = nb + 1 + pad;
    let d = displacement_matrix(gamma, nb + 1 + 2 * pad);
    let d_sub = d.view((0, 0), (rows, nb + 1));
    let out = psi * d_sub.transpose();
    let before = joint.norm_sq();
    let leaked = before - out.norm_squared();
    if leaked >= MAX_LEAKAGE * before.max(ZERO_NORM) {
        return Err(FockError::TailTooLarge {
            discarded: leaked,
            n_max: rows - 1,
        });
    }
    Ok(out)
}

fn norm_checked(sq: f64) -> Result<f64, FockError> {
    if sq < ZERO_NORM {
        Err(FockError::ZeroNorm)
    } else {
        Ok(sq)
    }
}

/// `|⟨a|b⟩|² / (‖a‖²‖b‖²)`.
pub fn fidelity(a: &PureState, b: &PureState) -> Result<f64, FockError> {
    let na = norm_checked(a.norm_sq())?;
    let nb = norm_checked(b.norm_sq())?;
    Ok((a.inner(b).norm_sqr() / (na * nb)).min(1.0))
}

/// `⟨b|ρ|b⟩ / (tr ρ ‖b‖²)`.
pub fn fidelity_mixed(rho: &DensityOperator, b: &PureState) -> Result<f64, FockError> {
    let tr = norm_checked(rho.trace())?;
    let nb = norm_checked(b.norm_sq())?;
    Ok((rho.expectation(b).re / (tr * nb)).clamp(0.0, 1.0))
}

/// `1 - fidelity(a, b)`, evaluated as the squared norm of the component of
/// `b̂` orthogonal to `â` so that tiny infidelities keep their precision.
pub fn infidelity(a: &PureState, b: &PureState) -> Result<f64, FockError> {
    let a = a.normalized()?;
    let b = b.normalized()?;
    let overlap = a.inner(&b);
    Ok(add_scaled(&b, -overlap, &a).norm_sq())
}

/// Trace distance `½ Σ|λ(ρ - σ)|` of the normalized operators.
pub fn trace_distance(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64, FockError> {
    let cutoff = rho.cutoff().max(sigma.cutoff());
    let a = rho.with_cutoff(cutoff)?.normalized()?;
    let b = sigma.with_cutoff(cutoff)?.normalized()?;
    let diff = DensityOperator::from_matrix(a.matrix() - b.matrix())?;
    Ok(0.5 * diff.eigenvalues().iter().map(|l| l.abs()).sum::<f64>())
}
