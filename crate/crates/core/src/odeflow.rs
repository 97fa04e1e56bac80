//! Classical side: generator abstraction, explicit-midpoint RK2 for states
//! and propagators, and SVD seeding of the factor flow.

use crate::error::{QsvdError, Result};
use crate::matcore::MatR;
use crate::scalar::Real;
use crate::svdeom::SvdFactors;
use crate::tolerance::Tolerances;

/// Time-dependent coefficient matrix `A(t)` of `v̇ = A(t) v`.
///
/// Implementations must be reentrant: `eval` may be called concurrently for
/// distinct times.
pub trait Generator<T: Real>: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, t: T) -> MatR<T>;
}

impl<T: Real, G: Generator<T> + ?Sized> Generator<T> for &G {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, t: T) -> MatR<T> {
        (**self).eval(t)
    }
}

impl<T: Real, G: Generator<T> + ?Sized + Send> Generator<T> for Box<G> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, t: T) -> MatR<T> {
        (**self).eval(t)
    }
}

/// Generator backed by a closure.
pub struct FnGenerator<F> {
    dim: usize,
    f: F,
}

impl<F> FnGenerator<F> {
    pub fn new(dim: usize, f: F) -> Self {
        FnGenerator { dim, f }
    }
}

impl<T: Real, F: Fn(T) -> MatR<T> + Sync> Generator<T> for FnGenerator<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, t: T) -> MatR<T> {
        (self.f)(t)
    }
}

/// Constant generator.
#[derive(Clone, Debug)]
pub struct ConstGenerator<T>(pub MatR<T>);

impl<T: Real> Generator<T> for ConstGenerator<T> {
    fn dim(&self) -> usize {
        self.0.rows()
    }
    fn eval(&self, _t: T) -> MatR<T> {
        self.0.clone()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T> {
    pub times: Vec<T>,
    pub states: Vec<Vec<T>>,
}

impl<T: Real> Trajectory<T> {
    pub fn last(&self) -> &[T] {
        self.states.last().expect("trajectory is never empty")
    }
}

/// One explicit-midpoint step: `v + h·A(t + h/2)·(v + (h/2)·A(t)·v)`.
pub fn rk2_step<T: Real, G: Generator<T> + ?Sized>(a: &G, v: &[T], t: T, h: T) -> Result<Vec<T>> {
    if !(h > T::zero()) {
        return Err(QsvdError::InvalidInput(format!("rk2_step: h must be positive, got {h}")));
    }
    let half = h / T::lit(2.0);
    let k1 = a.eval(t).matvec(v);
    let mid: Vec<T> = v.iter().zip(&k1).map(|(&x, &k)| x + half * k).collect();
    let k2 = a.eval(t + half).matvec(&mid);
    let out: Vec<T> = v.iter().zip(&k2).map(|(&x, &k)| x + h * k).collect();
    if out.iter().any(|x| !x.is_finite()) {
        return Err(QsvdError::NumericalOverflow { t: (t + h).to_f64_lossy() });
    }
    Ok(out)
}

fn check_interval<T: Real>(t0: T, t1: T, nsteps: usize) -> Result<()> {
    if nsteps == 0 {
        return Err(QsvdError::InvalidInput("nsteps must be at least 1".into()));
    }
    if !(t1 > t0) {
        return Err(QsvdError::InvalidInput(format!("empty interval [{t0}, {t1}]")));
    }
    Ok(())
}

/// Uniform-grid RK2 integration from `t0` to `t1` in `nsteps` steps.
pub fn integrate<T: Real, G: Generator<T> + ?Sized>(
    a: &G,
    v0: &[T],
    t0: T,
    t1: T,
    nsteps: usize,
) -> Result<Trajectory<T>> {
    check_interval(t0, t1, nsteps)?;
    let h = (t1 - t0) / T::lit(nsteps as f64);
    let mut times = Vec::with_capacity(nsteps + 1);
    let mut states = Vec::with_capacity(nsteps + 1);
    times.push(t0);
    states.push(v0.to_vec());
    for i in 0..nsteps {
        let t = grid_time(t0, t1, nsteps, i);
        let next = rk2_step(a, states.last().unwrap(), t, h).map_err(|e| e.at_step(i + 1))?;
        times.push(grid_time(t0, t1, nsteps, i + 1));
        states.push(next);
    }
    Ok(Trajectory { times, states })
}

/// `t0 + i (t1 − t0)/n`, hitting `t1` exactly at `i = n`.
pub fn grid_time<T: Real>(t0: T, t1: T, n: usize, i: usize) -> T {
    if i == n {
        t1
    } else {
        t0 + (t1 - t0) * T::lit(i as f64) / T::lit(n as f64)
    }
}

/// Matrix RK2 step for `Φ̇ = A(t)Φ`.
pub fn rk2_matrix_step<T: Real, G: Generator<T> + ?Sized>(a: &G, phi: &MatR<T>, t: T, h: T) -> Result<MatR<T>> {
    let half = h / T::lit(2.0);
    let k1 = a.eval(t).matmul(phi);
    let mid = phi.axpy(half, &k1);
    let k2 = a.eval(t + half).matmul(&mid);
    let out = phi.axpy(h, &k2);
    if !out.is_finite() {
        return Err(QsvdError::NumericalOverflow { t: (t + h).to_f64_lossy() });
    }
    Ok(out)
}

/// Continue a propagator `phi0 = Φ(t0)` to `Φ(t1)`.
pub fn propagate_matrix<T: Real, G: Generator<T> + ?Sized>(
    a: &G,
    phi0: &MatR<T>,
    t0: T,
    t1: T,
    nsteps: usize,
) -> Result<MatR<T>> {
    if t1 == t0 {
        return Ok(phi0.clone());
    }
    check_interval(t0, t1, nsteps)?;
    let h = (t1 - t0) / T::lit(nsteps as f64);
    let mut phi = phi0.clone();
    for i in 0..nsteps {
        phi = rk2_matrix_step(a, &phi, grid_time(t0, t1, nsteps, i), h).map_err(|e| e.at_step(i + 1))?;
    }
    Ok(phi)
}

/// Principal fundamental matrix `Φ(t1)` with `Φ(t0) = I`.
pub fn propagator<T: Real, G: Generator<T> + ?Sized>(a: &G, t0: T, t1: T, nsteps: usize) -> Result<MatR<T>> {
    propagate_matrix(a, &MatR::identity(a.dim()), t0, t1, nsteps)
}

/// Classical seeds of the factor flow at `t_seed − 2h`, `t_seed − h` and
/// `t_seed`, each obtained by integrating the propagator from 0 with `nsub`
/// substeps and taking its SVD.
pub fn seed_factors<T: Real, G: Generator<T> + ?Sized>(
    a: &G,
    t_seed: T,
    h: T,
    nsub: usize,
    tol: &Tolerances,
) -> Result<[SvdFactors<T>; 3]> {
    let two = T::lit(2.0);
    if !(h > T::zero()) || !(t_seed - two * h > T::zero()) {
        return Err(QsvdError::InvalidInput(format!("seed times must be positive: t_seed = {t_seed}, h = {h}")));
    }
    let times = [t_seed - two * h, t_seed - h, t_seed];
    let mut out = Vec::with_capacity(3);
    for t in times {
        let phi = propagator(a, T::zero(), t, nsub)?;
        out.push(SvdFactors::from_propagator(&phi, t, tol)?);
    }
    Ok(out.try_into().unwrap_or_else(|_| unreachable!()))
}
