use num_complex::Complex64;

use super::exec::Backend;
use super::rows::qubits_for;
use super::state::{Gate, StateVec};
use crate::error::{QsvdError, Result};
use crate::matcore::{nearest_orthogonal, MatR};
use crate::svdeom::SvdFactors;

/// Output of the dilation circuit after post-selecting the ancilla on `|0⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dilation {
    /// Conditional distribution over the `N` system states.
    pub probs: Vec<f64>,
    /// Fraction of shots (or probability mass) accepted; estimates
    /// `‖Φv₀‖² / σ₁²`.
    pub acceptance: f64,
    /// Accepted shot count; `None` for exact probabilities.
    pub accepted: Option<u64>,
}

/// Gates `H(anc) · V^T · U_Σ · U · H(anc)` on `k` system qubits plus the
/// ancilla `k`, where `U_Σ = Σ⁺ ⊕ Σ⁻` is selected by the ancilla.
///
/// Non-orthogonal `U` or `V` (as rebuilt from sampled rows) are replaced by
/// their nearest orthogonal matrices, since only unitaries can be loaded.
pub fn dilation_gates(f: &SvdFactors<f64>, tol: f64) -> Result<(usize, Vec<Gate>)> {
    let n = f.dim();
    let k = qubits_for(n);
    let load = |m: &MatR<f64>| -> Result<Gate> {
        match Gate::padded_real(m, k, tol) {
            Err(QsvdError::InvalidGate { .. }) => Gate::padded_real(&nearest_orthogonal(m)?, k, tol),
            other => other,
        }
    };
    let vt = load(&f.v.transpose())?;
    let u = load(&f.u)?;
    let dim = 1usize << k;
    let mut d = vec![Complex64::new(1.0, 0.0); 2 * dim];
    for (j, &sp) in f.sigma_plus.iter().enumerate() {
        d[j] = sp;
        d[dim + j] = sp.conj();
    }
    let usigma = Gate::diagonal(&d, (0..=k).collect(), tol)?;
    Ok((k, vec![Gate::hadamard(k), vt, usigma, u, Gate::hadamard(k)]))
}

/// Exact statevector run: post-selected system amplitudes (not renormalised,
/// so they equal `Φv₀/σ₁` for unit `v₀`) and the acceptance probability.
pub fn dilation_statevector(v0: &[f64], f: &SvdFactors<f64>, tol: f64) -> Result<(Vec<Complex64>, f64)> {
    let n = check_input(v0, f)?;
    let (k, gates) = dilation_gates(f, tol)?;
    let mut s = StateVec::embed(v0, k + 1)?;
    for g in &gates {
        s.apply(g);
    }
    let amps = s.amplitudes()[..n].to_vec();
    let acceptance = amps.iter().map(|a| a.norm_sqr()).sum();
    Ok((amps, acceptance))
}

/// Run the dilation circuit on `backend` and post-select.
pub fn dilation_circuit(v0: &[f64], f: &SvdFactors<f64>, backend: &Backend, seed: u64) -> Result<Dilation> {
    let n = check_input(v0, f)?;
    let (k, gates) = dilation_gates(f, backend.tol.unitarity)?;
    let init = StateVec::embed(v0, k + 1)?;
    let rec = backend.measure(&init, &gates, seed);
    let kept: f64 = rec.probs[..n].iter().sum();
    if !(kept > 0.0) {
        return Err(QsvdError::PostSelectionStarved);
    }
    let probs = rec.probs[..n].iter().map(|&p| p / kept).collect();
    let accepted = rec.counts.as_ref().map(|c| c[..n].iter().sum());
    Ok(Dilation { probs, acceptance: kept, accepted })
}

fn check_input(v0: &[f64], f: &SvdFactors<f64>) -> Result<usize> {
    let n = f.dim();
    if v0.len() != n {
        return Err(QsvdError::InvalidInput(format!("initial vector has {} entries, factors have {n}", v0.len())));
    }
    let norm2: f64 = v0.iter().map(|x| x * x).sum();
    if !((norm2 - 1.0).abs() <= 1e-12) {
        return Err(QsvdError::InvalidInput(format!("initial vector must be normalised, ‖v₀‖² = {norm2}")));
    }
    Ok(n)
}
