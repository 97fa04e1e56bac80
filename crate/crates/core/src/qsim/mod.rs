//! Statevector emulator for the quantum side of the factor flow: row-wise
//! Cayley updates of `U` and `V`, interferometric phase readout for `Σ⁺`,
//! the dilation circuit with ancilla post-selection, shot sampling and a
//! depolarizing/readout noise model.
//!
//! Everything here is `f64`.

mod dilation;
mod exec;
mod rows;
mod state;
mod step;

pub use dilation::{dilation_circuit, dilation_gates, dilation_statevector, Dilation};
pub use exec::{
    derive_seed, multinomial, readout_flips, run_shots, sample, Backend, Fidelity, MeasRecord, Role, ShotPlan,
};
pub use rows::{evolve_sigma_phase, propagate_row, qubits_for, sigma_state, PhaseReadout};
pub use state::{apply_unitary, Gate, NoiseSpec, StateVec};
pub use step::{qsvd_step, QsvdStepOutput, QuantumState, StepSettings};
