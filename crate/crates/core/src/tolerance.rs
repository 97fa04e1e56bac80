use serde::{Deserialize, Serialize};

/// Numerical guard thresholds. Every field can be overridden from a run
/// configuration file.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Minimum relative gap `|σⱼ − σₖ| / σ₁` between singular values.
    pub degeneracy: f64,
    /// Minimum `1 − σ̃ⱼ` for `j ≥ 2`; guards the `√(1 − σ̃²)` denominator.
    pub saturation: f64,
    /// Largest imaginary residue tolerated when recombining `Σ⁺ + Σ⁻`.
    pub imag_residue: f64,
    /// Unitarity check applied to every emulated gate.
    pub unitarity: f64,
    /// Sign floor is `sign_floor_factor / √n_shots`.
    pub sign_floor_factor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            degeneracy: 1e-8,
            saturation: 1e-6,
            imag_residue: 1e-12,
            unitarity: 1e-10,
            sign_floor_factor: 10.0,
        }
    }
}
