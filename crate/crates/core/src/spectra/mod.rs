//! Lowest eigenpairs of Hermitian operators and truncation-convergence studies.

mod convergence;
mod lanczos;

pub use convergence::{convergence_study, with_truncations, ConvergenceRow, ConvergenceTable};
pub use lanczos::{lowest_eigenpairs, EigenSolution, SolverKind, SolverOptions, DEGENERACY_TOL, DENSE_LIMIT};
