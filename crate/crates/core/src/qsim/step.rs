use num_complex::Complex64;

use super::exec::{derive_seed, Backend, Fidelity, Role};
use super::rows::{cis, evolve_sigma_phase, propagate_row};
use crate::error::{QsvdError, Result};
use crate::matcore::{cayley, nearest_orthogonal, MatR};
use crate::odeflow::Generator;
use crate::scalar::sign_of;
use crate::svdeom::{
    compute_snapshot, step_factors, GeneratorSnapshot, MidpointGenerators, SnapshotHistory, SvdFactors,
};

/// Quantum-side representation of the factors: measured rows of `U` and `V`
/// with their signs, the phases `φⱼ = arg σ⁺ⱼ`, and the classical `σ₁`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    pub t: f64,
    pub u: MatR<f64>,
    pub u_signs: MatR<f64>,
    pub v: MatR<f64>,
    pub v_signs: MatR<f64>,
    pub phases: Vec<f64>,
    pub sigma1: f64,
}

impl QuantumState {
    pub fn from_factors(f: &SvdFactors<f64>) -> Self {
        QuantumState {
            t: f.t,
            u: f.u.clone(),
            u_signs: f.u.map(sign_of),
            v: f.v.clone(),
            v_signs: f.v.map(sign_of),
            phases: f.sigma_plus.iter().map(|z| z.arg()).collect(),
            sigma1: f.sigma1,
        }
    }

    pub fn factors(&self) -> SvdFactors<f64> {
        let mut sigma_plus: Vec<Complex64> = self.phases.iter().map(|&p| cis(1.0, p)).collect();
        sigma_plus[0] = Complex64::new(1.0, 0.0);
        SvdFactors { t: self.t, u: self.u.clone(), v: self.v.clone(), sigma1: self.sigma1, sigma_plus }
    }
}

/// Per-run settings of the quantum step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepSettings {
    pub backend: Backend,
    /// Project the rebuilt `U` and `V` onto the orthogonal group.
    pub project: bool,
    pub rng_seed: u64,
}

#[derive(Clone, Debug)]
pub struct QsvdStepOutput {
    pub state: QuantumState,
    /// Snapshot at the pre-step time; push it into the history.
    pub snapshot: GeneratorSnapshot<f64>,
    pub midpoint: MidpointGenerators<f64>,
}

/// Advance the quantum-side factors by one step.
///
/// Snapshots come from the current (measured) factors; `Z` and `W` are
/// skew-symmetrised before use. Every row of `U` and `V` is pushed through
/// its Cayley update on the register and re-measured, the phases through the
/// interferometer, and `σ₁` classically. With [`Fidelity::Classical`] the
/// matrices are updated directly instead.
pub fn qsvd_step<G: Generator<f64> + ?Sized>(
    state: &QuantumState,
    history: &SnapshotHistory<f64>,
    a: &G,
    h: f64,
    step: u64,
    settings: &StepSettings,
) -> Result<QsvdStepOutput> {
    let backend = &settings.backend;
    let tol = &backend.tol;
    let f = state.factors();
    if backend.fidelity == Fidelity::Classical {
        let out = step_factors(&f, history, a, h, tol)?;
        let mut next = QuantumState::from_factors(&out.factors);
        if settings.project {
            next.u = nearest_orthogonal(&next.u)?;
            next.v = nearest_orthogonal(&next.v)?;
        }
        return Ok(QsvdStepOutput { state: next, snapshot: out.snapshot, midpoint: out.midpoint });
    }

    let snapshot = compute_snapshot(&f, a, tol)?;
    let mid = MidpointGenerators::extrapolate(&snapshot, &history.prev, &history.prev2)?;
    let cz = cayley(&mid.z, h)?.transpose();
    let cw = cayley(&mid.w, h)?.transpose();

    let seed = settings.rng_seed;
    let (u, u_signs) =
        advance_rows(&state.u, &state.u_signs, &cz, backend, |i| derive_seed(seed, step, Role::URow, i))?;
    let (v, v_signs) =
        advance_rows(&state.v, &state.v_signs, &cw, backend, |i| derive_seed(seed, step, Role::VRow, i))?;
    let phases = evolve_sigma_phase(&state.phases, &mid.lplus, h, backend, seed, step)?.phases;

    let sigma1 = state.sigma1 * (h * mid.g11).exp();
    let t = state.t + h;
    if !sigma1.is_finite() || !(sigma1 > 0.0) {
        return Err(QsvdError::NumericalOverflow { t });
    }
    let (u, v) = if settings.project { (nearest_orthogonal(&u)?, nearest_orthogonal(&v)?) } else { (u, v) };
    let next = QuantumState { t, u, u_signs, v, v_signs, phases, sigma1 };
    Ok(QsvdStepOutput { state: next, snapshot, midpoint: mid })
}

fn advance_rows(
    m: &MatR<f64>,
    signs: &MatR<f64>,
    cay_t: &MatR<f64>,
    backend: &Backend,
    seed_of: impl Fn(u64) -> u64,
) -> Result<(MatR<f64>, MatR<f64>)> {
    let n = m.rows();
    let mut out = MatR::zeros(n, n);
    let mut out_signs = MatR::zeros(n, n);
    for i in 0..n {
        let (row, s) = propagate_row(m.row(i), signs.row(i), cay_t, backend, seed_of(i as u64))?;
        out.set_row(i, &row);
        out_signs.set_row(i, &s);
    }
    Ok((out, out_signs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{two_state_generator, RateModel};
    use crate::odeflow::seed_factors;
    use crate::svdeom::{seed_history, FactorFlow};
    use crate::tolerance::Tolerances;

    #[test]
    fn exact_mode_tracks_classical_steps() {
        let g = two_state_generator(RateModel::demo()).unwrap();
        let tol = Tolerances::default();
        let h = (1e4 - 50.0) / 400.0;
        let seeds = seed_factors(&g, 50.0, h, 500, &tol).unwrap();
        let mut history = seed_history(&seeds[0], &seeds[1], &g, &tol).unwrap();
        let mut flow = FactorFlow::from_seeds(seeds.clone(), &g, h, &tol).unwrap();
        let mut q = QuantumState::from_factors(&seeds[2]);
        let settings = StepSettings { backend: Backend::exact(), project: false, rng_seed: 0 };
        for step in 0..40 {
            let out = qsvd_step(&q, &history, &g, h, step, &settings).unwrap();
            history.push(out.snapshot);
            q = out.state;
            flow.step(&g, &tol).unwrap();
            let c = &flow.factors;
            assert!((&q.u - &c.u).max_abs() < 1e-10, "step {step}");
            assert!((&q.v - &c.v).max_abs() < 1e-10);
            for (p, z) in q.phases.iter().zip(&c.sigma_plus) {
                assert!((p - z.arg()).abs() < 1e-10);
            }
            assert!((q.sigma1 - c.sigma1).abs() < 1e-12 * c.sigma1);
        }
    }
}
