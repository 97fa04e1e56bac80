//! Equations of motion for the SVD factors of the propagator.
//!
//! With `Φ = U Σ Vᵀ` and `G = Uᵀ A U`, the factors obey `U̇ = U Z`,
//! `V̇ = V W` and `σ̇ᵢ = Gᵢᵢ σᵢ`, where `Z` and `W` are skew-symmetric. Writing
//! `Σ = (σ₁/2)(Σ⁺ + Σ⁻)` with unit-modulus diagonals
//! `σ±ⱼ = σ̃ⱼ ± i√(1 − σ̃ⱼ²)` gives `Σ̇⁺ = −i L⁺ Σ⁺` with a real diagonal `L⁺`.
//! Every factor except the scalar `σ₁` therefore evolves under an orthogonal
//! (unitary) one-step map; here that map is the Cayley transform evaluated at
//! the step midpoint, with the midpoint generator extrapolated from the
//! three most recent snapshots.
//!
//! This module is the noise-free reference path. The emulated quantum path in
//! [`crate::qsim`] consumes the same snapshots.

use num_complex::Complex;

use crate::error::{QsvdError, Result};
use crate::matcore::{cayley, cayley_scalar, skew_part, svd, MatR};
use crate::odeflow::Generator;
use crate::scalar::Real;
use crate::tolerance::Tolerances;

/// SVD state of the propagator at time `t`.
///
/// `sigma_plus` is the source of truth for the rescaled singular values:
/// `σ̃ⱼ = Re σ⁺ⱼ`, and `sigma_plus[0]` is exactly `1`.
#[derive(Clone, Debug, PartialEq)]
pub struct SvdFactors<T> {
    pub t: T,
    pub u: MatR<T>,
    pub v: MatR<T>,
    pub sigma1: T,
    pub sigma_plus: Vec<Complex<T>>,
}

impl<T: Real> SvdFactors<T> {
    pub fn dim(&self) -> usize {
        self.sigma_plus.len()
    }

    /// `σ̃ⱼ = σⱼ / σ₁`.
    pub fn tilde(&self) -> Vec<T> {
        self.sigma_plus.iter().map(|z| z.re).collect()
    }

    /// Absolute singular values `σ₁ σ̃ⱼ`.
    pub fn sigma(&self) -> Vec<T> {
        self.tilde().into_iter().map(|s| s * self.sigma1).collect()
    }

    pub fn sigma_minus(&self) -> Vec<Complex<T>> {
        self.sigma_plus.iter().map(|z| z.conj()).collect()
    }

    /// Build factors from singular values in descending order.
    pub fn from_parts(t: T, u: MatR<T>, v: MatR<T>, sigma: &[T]) -> Result<Self> {
        let n = sigma.len();
        if n == 0 || u.rows() != n || !u.is_square() || v.rows() != n || !v.is_square() {
            return Err(QsvdError::InvalidInput("factor shapes disagree".into()));
        }
        let s1 = sigma[0];
        if !(s1 > T::zero()) || !s1.is_finite() {
            return Err(QsvdError::InvalidInput(format!("largest singular value must be positive, got {s1}")));
        }
        let mut sigma_plus = Vec::with_capacity(n);
        sigma_plus.push(Complex::new(T::one(), T::zero()));
        for &s in &sigma[1..] {
            let r = s / s1;
            if !(r > T::zero()) || r > T::one() {
                return Err(QsvdError::InvalidInput(format!("rescaled singular value {r} outside (0, 1]")));
            }
            sigma_plus.push(Complex::new(r, (T::one() - r * r).max(T::zero()).sqrt()));
        }
        Ok(SvdFactors { t, u, v, sigma1: s1, sigma_plus })
    }

    /// SVD of a propagator, rejecting degenerate spectra.
    pub fn from_propagator(phi: &MatR<T>, t: T, tol: &Tolerances) -> Result<Self> {
        let r = svd(phi)?;
        let n = r.s.len();
        let s1 = r.s[0];
        if !(s1 > T::zero()) {
            return Err(QsvdError::SeedDegeneracy { t: t.to_f64_lossy(), gap: 0.0, tol: tol.degeneracy });
        }
        for j in 0..n.saturating_sub(1) {
            let gap = ((r.s[j] - r.s[j + 1]) / s1).to_f64_lossy();
            if gap < tol.degeneracy {
                return Err(QsvdError::SeedDegeneracy { t: t.to_f64_lossy(), gap, tol: tol.degeneracy });
            }
        }
        if !(r.s[n - 1] > T::zero()) {
            return Err(QsvdError::InvalidInput(format!("propagator at t = {t} is singular")));
        }
        Self::from_parts(t, r.u, r.v, &r.s)
    }
}

/// Generators of the factor flow at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorSnapshot<T> {
    pub t: T,
    /// `Uᵀ A U`.
    pub g: MatR<T>,
    pub z: MatR<T>,
    pub w: MatR<T>,
    /// Diagonal of `L⁺`; `lplus[0] == 0`.
    pub lplus: Vec<T>,
}

/// Snapshot from factor weights, which may be either the absolute singular
/// values or the rescaled ones; `Z` and `W` are invariant under a common
/// scale and `L⁺` only sees the ratios.
pub fn snapshot_from_weights<T: Real>(
    u: &MatR<T>,
    weights: &[T],
    a_t: &MatR<T>,
    t: T,
    tol: &Tolerances,
) -> Result<GeneratorSnapshot<T>> {
    let n = weights.len();
    if u.rows() != n || a_t.rows() != n || !a_t.is_square() {
        return Err(QsvdError::InvalidInput("snapshot: dimension mismatch".into()));
    }
    let w0 = weights[0];
    let ratio: Vec<T> = weights.iter().map(|&w| w / w0).collect();
    let tf = t.to_f64_lossy();
    for (j, &r) in ratio.iter().enumerate().skip(1) {
        let margin = (T::one() - r).to_f64_lossy();
        if margin < tol.saturation {
            return Err(QsvdError::SigmaSaturation { t: tf, j, margin, tol: tol.saturation });
        }
    }
    for j in 0..n {
        for k in j + 1..n {
            let gap = (ratio[j] - ratio[k]).abs().to_f64_lossy();
            if gap < tol.degeneracy {
                return Err(QsvdError::FactorDegeneracy { t: tf, j, k, gap, tol: tol.degeneracy });
            }
        }
    }

    let g = u.transpose().matmul(a_t).matmul(u);
    let mut z = MatR::zeros(n, n);
    let mut w = MatR::zeros(n, n);
    for j in 0..n {
        for k in 0..n {
            if j == k {
                continue;
            }
            let (sj, sk) = (weights[j], weights[k]);
            let den = sk * sk - sj * sj;
            z[(j, k)] = (sk * sk * g[(j, k)] + sj * sj * g[(k, j)]) / den;
            w[(j, k)] = sk * sj * (g[(k, j)] + g[(j, k)]) / den;
        }
    }
    let z = skew_part(&z);
    let w = skew_part(&w);

    let g11 = g[(0, 0)];
    let mut lplus = vec![T::zero(); n];
    for j in 1..n {
        let r = ratio[j];
        lplus[j] = r * (g[(j, j)] - g11) / (T::one() - r * r).sqrt();
    }
    if !g.is_finite() || !z.is_finite() || !w.is_finite() || lplus.iter().any(|x| !x.is_finite()) {
        return Err(QsvdError::NumericalOverflow { t: tf });
    }
    Ok(GeneratorSnapshot { t, g, z, w, lplus })
}

/// Snapshot at `f.t` using `σ̃`.
pub fn compute_snapshot<T: Real, G: Generator<T> + ?Sized>(
    f: &SvdFactors<T>,
    a: &G,
    tol: &Tolerances,
) -> Result<GeneratorSnapshot<T>> {
    snapshot_from_weights(&f.u, &f.tilde(), &a.eval(f.t), f.t, tol)
}

/// Midpoint extrapolation `(23 s₀ − 16 s₋₁ + 5 s₋₂) / 12` from three
/// equally spaced samples, newest first.
pub fn mpea<T: Real>(s_i: &MatR<T>, s_im1: &MatR<T>, s_im2: &MatR<T>) -> Result<MatR<T>> {
    if !s_i.same_shape(s_im1) || !s_i.same_shape(s_im2) {
        return Err(QsvdError::InvalidInput("mpea: shape mismatch".into()));
    }
    Ok(MatR::from_fn(s_i.rows(), s_i.cols(), |r, c| mpea_scalar(s_i[(r, c)], s_im1[(r, c)], s_im2[(r, c)])))
}

pub fn mpea_scalar<T: Real>(a: T, b: T, c: T) -> T {
    (T::lit(23.0) * a - T::lit(16.0) * b + T::lit(5.0) * c) / T::lit(12.0)
}

pub fn mpea_vec<T: Real>(a: &[T], b: &[T], c: &[T]) -> Result<Vec<T>> {
    if a.len() != b.len() || a.len() != c.len() {
        return Err(QsvdError::InvalidInput("mpea: length mismatch".into()));
    }
    Ok(a.iter().zip(b).zip(c).map(|((&x, &y), &z)| mpea_scalar(x, y, z)).collect())
}

/// Extrapolated midpoint generators used for one step.
#[derive(Clone, Debug, PartialEq)]
pub struct MidpointGenerators<T> {
    pub z: MatR<T>,
    pub w: MatR<T>,
    pub lplus: Vec<T>,
    pub g11: T,
}

impl<T: Real> MidpointGenerators<T> {
    pub fn extrapolate(
        cur: &GeneratorSnapshot<T>,
        prev: &GeneratorSnapshot<T>,
        prev2: &GeneratorSnapshot<T>,
    ) -> Result<Self> {
        Ok(MidpointGenerators {
            z: mpea(&cur.z, &prev.z, &prev2.z)?,
            w: mpea(&cur.w, &prev.w, &prev2.w)?,
            lplus: mpea_vec(&cur.lplus, &prev.lplus, &prev2.lplus)?,
            g11: mpea_scalar(cur.g[(0, 0)], prev.g[(0, 0)], prev2.g[(0, 0)]),
        })
    }
}

/// The two snapshots preceding the current step, newest first.
#[derive(Clone, Debug)]
pub struct SnapshotHistory<T> {
    pub prev: GeneratorSnapshot<T>,
    pub prev2: GeneratorSnapshot<T>,
}

impl<T: Real> SnapshotHistory<T> {
    pub fn push(&mut self, newest: GeneratorSnapshot<T>) {
        self.prev2 = std::mem::replace(&mut self.prev, newest);
    }
}

/// Result of one factor step.
#[derive(Clone, Debug)]
pub struct StepOutput<T> {
    pub factors: SvdFactors<T>,
    /// Snapshot at the pre-step time; push it into the history.
    pub snapshot: GeneratorSnapshot<T>,
    pub midpoint: MidpointGenerators<T>,
}

/// Unit-modulus Cayley factor for `−i λ`.
pub fn phase_factor<T: Real>(lambda: T, h: T) -> Result<Complex<T>> {
    cayley_scalar(Complex::new(T::zero(), -lambda), h)
}

/// One noise-free step of all factors from `f.t` to `f.t + h`.
pub fn step_factors<T: Real, G: Generator<T> + ?Sized>(
    f: &SvdFactors<T>,
    history: &SnapshotHistory<T>,
    a: &G,
    h: T,
    tol: &Tolerances,
) -> Result<StepOutput<T>> {
    let snapshot = compute_snapshot(f, a, tol)?;
    let mid = MidpointGenerators::extrapolate(&snapshot, &history.prev, &history.prev2)?;
    let u = f.u.matmul(&cayley(&mid.z, h)?);
    let v = f.v.matmul(&cayley(&mid.w, h)?);
    let mut sigma_plus = Vec::with_capacity(f.dim());
    for (j, (&sp, &l)) in f.sigma_plus.iter().zip(&mid.lplus).enumerate() {
        sigma_plus.push(if j == 0 { sp } else { phase_factor(l, h)? * sp });
    }
    let sigma1 = f.sigma1 * (h * mid.g11).exp();
    let t = f.t + h;
    if !u.is_finite() || !v.is_finite() || !sigma1.is_finite() || !(sigma1 > T::zero()) {
        return Err(QsvdError::NumericalOverflow { t: t.to_f64_lossy() });
    }
    Ok(StepOutput { factors: SvdFactors { t, u, v, sigma1, sigma_plus }, snapshot, midpoint: mid })
}

/// `(σ₁/2)·U·(Σ⁺ + Σ⁻)·Vᵀ`.
pub fn reconstruct_phi<T: Real>(f: &SvdFactors<T>, tol: &Tolerances) -> Result<MatR<T>> {
    let n = f.dim();
    let half = f.sigma1 / T::lit(2.0);
    let d: Vec<Complex<T>> = f.sigma_plus.iter().zip(f.sigma_minus()).map(|(&p, m)| p + m).collect();
    let residue = d.iter().map(|z| z.im.abs()).fold(T::zero(), T::max).to_f64_lossy();
    if residue > tol.imag_residue {
        return Err(QsvdError::Inconsistency { residue });
    }
    let us = MatR::from_fn(n, n, |i, j| f.u[(i, j)] * d[j].re * half);
    Ok(us.matmul(&f.v.transpose()))
}

/// Snapshots of the two seeds preceding the start time.
///
/// The saturation guard covers the propagation window only; seeds before it
/// may sit arbitrarily close to `Φ = I` and are checked for degeneracy alone.
pub fn seed_history<T: Real, G: Generator<T> + ?Sized>(
    oldest: &SvdFactors<T>,
    middle: &SvdFactors<T>,
    a: &G,
    tol: &Tolerances,
) -> Result<SnapshotHistory<T>> {
    let seed_tol = Tolerances { saturation: 0.0, ..*tol };
    Ok(SnapshotHistory {
        prev: compute_snapshot(middle, a, &seed_tol)?,
        prev2: compute_snapshot(oldest, a, &seed_tol)?,
    })
}

/// Owns the factor state and snapshot history of a noise-free run.
#[derive(Clone, Debug)]
pub struct FactorFlow<T> {
    pub factors: SvdFactors<T>,
    pub history: SnapshotHistory<T>,
    pub h: T,
    pub steps_taken: usize,
}

impl<T: Real> FactorFlow<T> {
    /// Start from seeds at `t − 2h`, `t − h`, `t` (oldest first).
    pub fn from_seeds<G: Generator<T> + ?Sized>(
        seeds: [SvdFactors<T>; 3],
        a: &G,
        h: T,
        tol: &Tolerances,
    ) -> Result<Self> {
        let [s0, s1, s2] = seeds;
        let history = seed_history(&s0, &s1, a, tol)?;
        Ok(FactorFlow { factors: s2, history, h, steps_taken: 0 })
    }

    pub fn step<G: Generator<T> + ?Sized>(&mut self, a: &G, tol: &Tolerances) -> Result<MidpointGenerators<T>> {
        let out =
            step_factors(&self.factors, &self.history, a, self.h, tol).map_err(|e| e.at_step(self.steps_taken + 1))?;
        self.history.push(out.snapshot);
        self.factors = out.factors;
        self.steps_taken += 1;
        Ok(out.midpoint)
    }
}
