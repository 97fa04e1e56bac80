use num_complex::Complex64;

use super::exec::{derive_seed, Backend, Role};
use super::state::{Gate, StateVec};
use crate::error::{QsvdError, Result};
use crate::matcore::MatR;
use crate::scalar::sign_of;
use crate::svdeom::phase_factor;

/// `r·e^{iφ}` from separate `cos` and `sin` calls, so optimised and debug
/// builds round the same way.
pub(crate) fn cis(r: f64, phi: f64) -> Complex64 {
    let phi = std::hint::black_box(phi);
    Complex64::new(r * phi.cos(), r * std::hint::black_box(phi).sin())
}

/// Number of qubits for an `n`-dimensional vector.
pub fn qubits_for(n: usize) -> usize {
    n.next_power_of_two().trailing_zeros() as usize
}

/// Advance one row `r ↦ cay_zt · r` on the register and rebuild it from
/// measured magnitudes.
///
/// Signs are carried over from `prev_signs`. An entry whose estimated
/// magnitude, before or after the update, is below the backend's sign floor
/// takes the sign of the noise-free prediction `cay_zt · row` instead.
pub fn propagate_row(
    row: &[f64],
    prev_signs: &[f64],
    cay_zt: &MatR<f64>,
    backend: &Backend,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = row.len();
    if cay_zt.rows() != n || !cay_zt.is_square() || prev_signs.len() != n {
        return Err(QsvdError::InvalidInput("propagate_row: dimension mismatch".into()));
    }
    let k = qubits_for(n);
    let state = StateVec::embed(row, k).map_err(|_| QsvdError::ReconstructionFailure)?;
    let gate = Gate::padded_real(cay_zt, k, backend.tol.unitarity)?;
    let rec = backend.measure(&state, &[gate], seed);

    let kept: f64 = rec.probs[..n].iter().sum();
    if !(kept > 0.0) {
        return Err(QsvdError::ReconstructionFailure);
    }
    let predicted = cay_zt.matvec(row);
    let floor = backend.sign_floor();
    let mut out = Vec::with_capacity(n);
    let mut signs = Vec::with_capacity(n);
    for j in 0..n {
        let mag = (rec.probs[j] / kept).sqrt();
        let s = if mag < floor || row[j].abs() < floor { sign_of(predicted[j]) } else { prev_signs[j] };
        out.push(s * mag);
        signs.push(s);
    }
    Ok((out, signs))
}

/// Phase estimates with their propagated standard errors.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseReadout {
    pub phases: Vec<f64>,
    pub stderr: Vec<f64>,
}

/// `|Σ⁺⟩ = N^{-1/2} Σⱼ e^{iφⱼ}|j⟩`, zero-padded.
pub fn sigma_state(phases: &[f64]) -> Result<StateVec> {
    let n = phases.len();
    let k = qubits_for(n);
    let r = 1.0 / (n as f64).sqrt();
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << k];
    for (a, &p) in amps.iter_mut().zip(phases) {
        *a = cis(r, p);
    }
    StateVec::from_amplitudes(amps)
}

/// Advance the diagonal phases by the Cayley factors of `−i·lplus_mid` and
/// read each relative phase back with a two-level interferometer.
///
/// Each `j ≥ 1` uses two circuits on a freshly prepared `|Σ⁺⟩`: a Hadamard
/// mixing `|0⟩` and `|j⟩` gives `cos φⱼ`, and the same after `S†` on `|j⟩`
/// gives `sin φⱼ`.
pub fn evolve_sigma_phase(
    phases: &[f64],
    lplus_mid: &[f64],
    h: f64,
    backend: &Backend,
    master_seed: u64,
    step: u64,
) -> Result<PhaseReadout> {
    let n = phases.len();
    if lplus_mid.len() != n || n == 0 {
        return Err(QsvdError::InvalidInput("evolve_sigma_phase: dimension mismatch".into()));
    }
    let k = qubits_for(n);
    let dim = 1usize << k;
    let tol = backend.tol.unitarity;
    let state = sigma_state(phases)?;

    let mut d = vec![Complex64::new(1.0, 0.0); dim];
    for j in 1..n {
        d[j] = phase_factor(lplus_mid[j], h)?;
    }
    let evolve = Gate::diagonal(&d, (0..k).collect(), tol)?;

    let mut out = PhaseReadout { phases: vec![0.0; n], stderr: vec![0.0; n] };
    for j in 1..n {
        let mix = Gate::two_level_hadamard(0, j, k);
        let mut sdag = vec![Complex64::new(1.0, 0.0); dim];
        sdag[j] = Complex64::new(0.0, -1.0);
        let sdag = Gate::diagonal(&sdag, (0..k).collect(), tol)?;

        let cos_rec = backend.measure(
            &state,
            &[evolve.clone(), mix.clone()],
            derive_seed(master_seed, step, Role::PhaseCos, j as u64),
        );
        let sin_rec = backend.measure(
            &state,
            &[evolve.clone(), sdag, mix],
            derive_seed(master_seed, step, Role::PhaseSin, j as u64),
        );
        let (c, nc) = contrast(&cos_rec.probs, cos_rec.n_shots, j);
        let (s, ns) = contrast(&sin_rec.probs, sin_rec.n_shots, j);
        let radius2 = c * c + s * s;
        if !(radius2 >= 0.5) {
            return Err(QsvdError::PhaseReconstructionFailure { j, radius2 });
        }
        out.phases[j] = s.atan2(c);
        if nc > 0.0 && ns > 0.0 {
            let vc = (1.0 - c * c).max(0.0) / nc;
            let vs = (1.0 - s * s).max(0.0) / ns;
            out.stderr[j] = ((s * s * vc + c * c * vs) / (radius2 * radius2)).sqrt();
        }
    }
    Ok(out)
}

// (p0 − pj)/(p0 + pj) and the number of shots that landed in the subspace
fn contrast(probs: &[f64], n_shots: u64, j: usize) -> (f64, f64) {
    let (p0, pj) = (probs[0], probs[j]);
    let sum = p0 + pj;
    if sum > 0.0 {
        ((p0 - pj) / sum, sum * n_shots as f64)
    } else {
        (0.0, 0.0)
    }
}
