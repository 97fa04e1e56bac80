//! Simulation of nonunitary dynamics `v̇ = A(t) v` by evolving the SVD
//! factors of the propagator under orthogonal and unitary one-step maps.
//!
//! The math layers ([`matcore`], [`odeflow`], [`svdeom`]) are generic over the
//! floating point type through [`Real`]; the statevector emulator
//! ([`qsim`]) and the run [`pipeline`] work in `f64`. Aliases for the `f64`
//! instantiations live at the crate root.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod matcore;
pub mod models;
pub mod odeflow;
pub mod pipeline;
pub mod qsim;
pub mod scalar;
pub mod svdeom;
pub mod tolerance;

pub use error::{ErrorClass, QsvdError, Result};
pub use scalar::{Real, Scalar};
pub use tolerance::Tolerances;

pub type MatR64 = matcore::MatR<f64>;
pub type MatC64 = matcore::MatC<f64>;
pub type MatR32 = matcore::MatR<f32>;
pub type SvdFactors64 = svdeom::SvdFactors<f64>;
pub type SvdFactors32 = svdeom::SvdFactors<f32>;
pub type GeneratorSnapshot64 = svdeom::GeneratorSnapshot<f64>;
