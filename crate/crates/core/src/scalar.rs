//! Scalar abstractions shared by the dense linear algebra and the integrators.
//!
//! [`Real`] is the floating point field everything is generic over (`f32` or
//! `f64`); [`Scalar`] additionally covers `Complex<T>` so that a single matrix
//! type can hold both the real SVD factors and the complex diagonal unitaries.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point field: f32 or f64.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Scalar<Real = Self>
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Matrix entry: a real or a complex number over some [`Real`].
pub trait Scalar: Copy + PartialEq + Debug + NumAssign + std::ops::Neg<Output = Self> + Send + Sync + 'static {
    type Real: Real;

    fn from_real(r: Self::Real) -> Self;
    fn modulus(self) -> Self::Real;
    fn modulus_sqr(self) -> Self::Real;
    fn conjugate(self) -> Self;
    fn is_finite_value(self) -> bool;
    fn real_part(self) -> Self::Real;
    fn imag_part(self) -> Self::Real;
}

macro_rules! impl_real_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            type Real = $t;

            fn from_real(r: $t) -> Self {
                r
            }
            fn modulus(self) -> $t {
                self.abs()
            }
            fn modulus_sqr(self) -> $t {
                self * self
            }
            fn conjugate(self) -> Self {
                self
            }
            fn is_finite_value(self) -> bool {
                self.is_finite()
            }
            fn real_part(self) -> $t {
                self
            }
            fn imag_part(self) -> $t {
                0.0
            }
        }
    };
}

impl_real_scalar!(f32);
impl_real_scalar!(f64);

impl<T: Real> Scalar for Complex<T> {
    type Real = T;

    fn from_real(r: T) -> Self {
        Complex::new(r, T::zero())
    }
    fn modulus(self) -> T {
        self.norm()
    }
    fn modulus_sqr(self) -> T {
        self.norm_sqr()
    }
    fn conjugate(self) -> Self {
        self.conj()
    }
    fn is_finite_value(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn real_part(self) -> T {
        self.re
    }
    fn imag_part(self) -> T {
        self.im
    }
}

/// Sign with `+1` for zero, so a sign vector never contains zeros.
pub fn sign_of<T: Real>(x: T) -> T {
    if x < T::zero() {
        -T::one()
    } else {
        T::one()
    }
}
