//! Concrete generators: the two-state donor/acceptor population equation with
//! time-dependent rates, and seeded synthetic generators for testing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QsvdError, Result};
use crate::matcore::{skew_part, MatR};
use crate::odeflow::Generator;
use crate::scalar::Real;

/// `k(t) = k_inf + (k0 − k_inf)·exp(−t/tau)`, in inverse atomic units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateParams {
    pub k0: f64,
    pub k_inf: f64,
    pub tau: f64,
}

impl RateParams {
    pub const fn constant(k: f64) -> Self {
        RateParams { k0: k, k_inf: k, tau: 1.0 }
    }

    pub fn rate<T: Real>(&self, t: T) -> T {
        let (k0, kinf, tau) = (T::lit(self.k0), T::lit(self.k_inf), T::lit(self.tau));
        kinf + (k0 - kinf) * (-t / tau).exp()
    }

    fn validate(&self, name: &str) -> Result<()> {
        let ok = self.k0.is_finite() && self.k_inf.is_finite() && self.k0 >= 0.0 && self.k_inf >= 0.0;
        if !ok || !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(QsvdError::Config(format!("rate {name}: need k0, k_inf >= 0 and tau > 0, got {self:?}")));
        }
        Ok(())
    }
}

/// Donor→acceptor and acceptor→donor rate functions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateModel {
    pub k_da: RateParams,
    pub k_ad: RateParams,
}

impl RateModel {
    /// Default demonstration rates. Both channels switch on linearly from
    /// zero and level off after a few hundred au; the donor population relaxes
    /// towards `P_D ≈ 0.27` well before `t = 10⁴`.
    pub const fn demo() -> Self {
        RateModel {
            k_da: RateParams { k0: 0.0, k_inf: 4.0e-4, tau: 200.0 },
            k_ad: RateParams { k0: 0.0, k_inf: 1.5e-4, tau: 300.0 },
        }
    }

    pub fn constant(k_da: f64, k_ad: f64) -> Self {
        RateModel { k_da: RateParams::constant(k_da), k_ad: RateParams::constant(k_ad) }
    }

    pub fn validate(&self) -> Result<()> {
        self.k_da.validate("k_da")?;
        self.k_ad.validate("k_ad")
    }
}

impl Default for RateModel {
    fn default() -> Self {
        Self::demo()
    }
}

/// `A(t) = [[−k_da, k_ad], [k_da, −k_ad]]`; columns sum to zero.
#[derive(Clone, Debug)]
pub struct TwoStateGenerator {
    pub model: RateModel,
}

pub fn two_state_generator(model: RateModel) -> Result<TwoStateGenerator> {
    model.validate()?;
    Ok(TwoStateGenerator { model })
}

impl<T: Real> Generator<T> for TwoStateGenerator {
    fn dim(&self) -> usize {
        2
    }

    fn eval(&self, t: T) -> MatR<T> {
        let kda = self.model.k_da.rate(t);
        let kad = self.model.k_ad.rate(t);
        MatR::from_rows(&[&[-kda, kad], &[kda, -kad]])
    }
}

/// Closed-form populations for constant rates and `P_D(0) = 1`.
pub fn analytic_two_state<T: Real>(k_da: T, k_ad: T, t: T) -> (T, T) {
    let k = k_da + k_ad;
    if k == T::zero() {
        return (T::one(), T::zero());
    }
    let pd = k_ad / k + (k_da / k) * (-k * t).exp();
    (pd, T::one() - pd)
}

/// `A(t) = A₀ + s·(A₁ sin ωt + A₂ e^{−t/τ})` with seeded random matrices.
#[derive(Clone, Debug)]
pub struct SyntheticGenerator {
    n: usize,
    a0: MatR<f64>,
    a1: MatR<f64>,
    a2: MatR<f64>,
    omega: f64,
    tau: f64,
    skew: bool,
}

impl SyntheticGenerator {
    /// Skew-symmetric projection of the same generator; its exact flow is
    /// orthogonal.
    pub fn skew_projected(mut self) -> Self {
        self.skew = true;
        self
    }

    pub fn with_offset(mut self, d: &[f64]) -> Self {
        for (i, &x) in d.iter().enumerate().take(self.n) {
            self.a0[(i, i)] += x;
        }
        self
    }
}

pub fn synthetic_generator(n: usize, seed: u64, smoothness: f64) -> Result<SyntheticGenerator> {
    if n < 2 {
        return Err(QsvdError::InvalidInput(format!("synthetic generator needs n >= 2, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |scale: f64| MatR::from_fn(n, n, |_, _| scale * rng.random_range(-0.5..0.5));
    let a0 = draw(1.0);
    let a1 = draw(smoothness);
    let a2 = draw(smoothness);
    Ok(SyntheticGenerator { n, a0, a1, a2, omega: 0.7, tau: 2.0, skew: false })
}

impl<T: Real> Generator<T> for SyntheticGenerator {
    fn dim(&self) -> usize {
        self.n
    }

    fn eval(&self, t: T) -> MatR<T> {
        let s = (T::lit(self.omega) * t).sin();
        let e = (-t / T::lit(self.tau)).exp();
        let m = MatR::from_fn(self.n, self.n, |i, j| {
            T::lit(self.a0[(i, j)]) + T::lit(self.a1[(i, j)]) * s + T::lit(self.a2[(i, j)]) * e
        });
        if self.skew {
            skew_part(&m)
        } else {
            m
        }
    }
}
