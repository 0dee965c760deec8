//! Composite qubit/coupler systems to N-qubit Pauli Hamiltonians.

mod diagonal;
mod pauli;
mod register;
mod rotation;
mod swt;

pub use diagonal::{
    computational_state_probabilities, diagonal_coefficients, diagonal_reduction, nonstoquastic_check,
    reduced_state_probabilities, sign_patterns, NonStoquastic, CLUSTER_TOL, SIGN_THRESHOLD,
};
pub use pauli::{align_signs, gauge_fix, pauli_decompose, pauli_reconstruct, y_rotation, z_rotation, PauliHamiltonian};
pub use register::{gap_check, GapCheck, GapLine, QubitRegister, DEFAULT_DIM_CAP};
pub use rotation::{approximate_rotation_reduction, remove_mixed_two_local, RotationOptions};
pub use swt::{diagnostics, projector_distance, schrieffer_wolff_reduction, MultiReduction};

/// Conditions under which a multi-qubit reduction is trusted.
#[derive(Debug, Clone, PartialEq)]
pub struct ReductionDiagnostics {
    /// spectral gap of H0 above its lowest 2^N levels (GHz)
    pub gap: f64,
    /// ||H_int||_op estimate (GHz)
    pub interaction_norm: f64,
    /// ||P - P0||_op
    pub projector_distance: f64,
    /// the computational product states are the lowest 2^N levels of H0
    pub subspace_is_lowest: bool,
    pub gap_lines: Vec<GapLine>,
    /// ||U^dagger U - I||_op of the direct rotation
    pub unitarity: Option<f64>,
    /// ||U P U^dagger - P0||_op
    pub conjugation: Option<f64>,
}

impl ReductionDiagnostics {
    pub fn interaction_small(&self) -> bool {
        self.interaction_norm < 0.5 * self.gap
    }
}
