use thiserror::Error;

pub type Result<T, E = QsvdError> = std::result::Result<T, E>;

/// Every failure mode of the library. Variants group into three classes (see
/// [`QsvdError::class`]) which the command-line driver maps onto exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QsvdError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("Cayley resolvent is singular (pivot {pivot:e}); shrink the time step")]
    StepFailure { pivot: f64 },

    #[error(
        "nearest orthogonal projection undefined: matrix is rank deficient (smallest singular value {smallest:e})"
    )]
    ProjectionUndefined { smallest: f64 },

    #[error("non-finite value produced by the integrator at t = {t}")]
    NumericalOverflow { t: f64 },

    #[error("seed propagator at t = {t} has degenerate singular values (relative gap {gap:e} < {tol:e}); use a later seed time")]
    SeedDegeneracy { t: f64, gap: f64, tol: f64 },

    #[error("singular values {j} and {k} are degenerate at t = {t} (relative gap {gap:e} < {tol:e})")]
    FactorDegeneracy { t: f64, j: usize, k: usize, gap: f64, tol: f64 },

    #[error("rescaled singular value {j} saturated at t = {t} (1 - sigma~ = {margin:e} < {tol:e})")]
    SigmaSaturation { t: f64, j: usize, margin: f64, tol: f64 },

    #[error("reconstructed propagator has imaginary residue {residue:e}")]
    Inconsistency { residue: f64 },

    #[error("gate is not unitary (deviation {deviation:e})")]
    InvalidGate { deviation: f64 },

    #[error("row reconstruction failed: all sampled magnitudes vanished")]
    ReconstructionFailure,

    #[error("phase reconstruction failed for component {j}: cos^2 + sin^2 = {radius2:.3} < 0.5")]
    PhaseReconstructionFailure { j: usize, radius2: f64 },

    #[error("post-selection starved: no shot accepted on the ancilla |0> branch")]
    PostSelectionStarved,

    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<QsvdError>,
    },
}

/// Coarse failure class, used for exit codes and error records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    NumericalGuard,
    Reconstruction,
}

impl QsvdError {
    pub fn at_step(self, step: usize) -> Self {
        match self {
            // keep the innermost step index
            e @ QsvdError::AtStep { .. } => e,
            e => QsvdError::AtStep { step, source: Box::new(e) },
        }
    }

    /// Innermost error, with step wrappers removed.
    pub fn root(&self) -> &QsvdError {
        match self {
            QsvdError::AtStep { source, .. } => source.root(),
            e => e,
        }
    }

    pub fn step(&self) -> Option<usize> {
        match self {
            QsvdError::AtStep { step, .. } => Some(*step),
            _ => None,
        }
    }

    pub fn class(&self) -> ErrorClass {
        use QsvdError::*;
        match self.root() {
            InvalidInput(_) | Config(_) => ErrorClass::Config,
            StepFailure { .. }
            | ProjectionUndefined { .. }
            | NumericalOverflow { .. }
            | SeedDegeneracy { .. }
            | FactorDegeneracy { .. }
            | SigmaSaturation { .. }
            | InvalidGate { .. } => ErrorClass::NumericalGuard,
            Inconsistency { .. } | ReconstructionFailure | PhaseReconstructionFailure { .. } | PostSelectionStarved => {
                ErrorClass::Reconstruction
            }
            AtStep { .. } => unreachable!("root() strips step wrappers"),
        }
    }

    /// Short machine-readable name of the root failure.
    pub fn kind(&self) -> &'static str {
        use QsvdError::*;
        match self.root() {
            InvalidInput(_) => "invalid-input",
            Config(_) => "config",
            StepFailure { .. } => "step-failure",
            ProjectionUndefined { .. } => "projection-undefined",
            NumericalOverflow { .. } => "numerical-overflow",
            SeedDegeneracy { .. } => "seed-degeneracy",
            FactorDegeneracy { .. } => "factor-degeneracy",
            SigmaSaturation { .. } => "sigma-saturation",
            Inconsistency { .. } => "inconsistency",
            InvalidGate { .. } => "invalid-gate",
            ReconstructionFailure => "reconstruction-failure",
            PhaseReconstructionFailure { .. } => "phase-reconstruction-failure",
            PostSelectionStarved => "post-selection-starved",
            AtStep { .. } => unreachable!(),
        }
    }
}
