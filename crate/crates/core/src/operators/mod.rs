//! Truncated single-mode operators, tensor-product embedding and Hamiltonian
//! assembly.

mod assemble;
mod basis;
mod kron;
mod project;
mod sparse;

pub use assemble::{assemble_hamiltonian, mode_bases};
pub use basis::{displacement, laguerre, ModeBasis, Which};
pub use kron::{apply_mode, Factor, KronSum, ProductTerm};
pub use project::{project_low_energy, project_operator, ProjectedCircuit};
pub use sparse::{tensor_embed, OperatorMatrix, DROP_TOL};

use crate::linalg::CMat;
use crate::Result;

/// Single-mode operator of `basis`.
pub fn mode_operator(basis: &ModeBasis, which: Which) -> Result<CMat> {
    basis.operator(which)
}
