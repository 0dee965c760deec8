use nalgebra::DVector;

use super::pauli::{gauge_fix, pauli_decompose, pauli_reconstruct, PauliHamiltonian};
use super::register::{gap_check, QubitRegister};
use super::ReductionDiagnostics;
use crate::linalg::{c, eigh, herm_fn, op_norm_dense, op_norm_power, orthonormal_columns, singular_values, CMat};
use crate::operators::KronSum;
use crate::spectra::EigenSolution;
use crate::{Error, Result};

/// Output of a multi-qubit reduction.
#[derive(Debug, Clone)]
pub struct MultiReduction {
    pub hamiltonian: PauliHamiltonian,
    /// reduced Hamiltonian in the computational basis
    pub hq: CMat,
    pub diagnostics: ReductionDiagnostics,
    /// the 2^N circuit energies being reproduced
    pub energies: Vec<f64>,
    pub warnings: Vec<String>,
}

impl MultiReduction {
    /// Largest relative deviation between eig(H_q) and the circuit energies.
    pub fn spectrum_error(&self) -> f64 {
        let (w, _) = eigh(&pauli_reconstruct(&self.hamiltonian));
        let scale = self
            .energies
            .iter()
            .fold(0.0f64, |a, x| a.max(x.abs()))
            .max(f64::MIN_POSITIVE);
        w.iter()
            .zip(&self.energies)
            .map(|(a, b)| (a - b).abs() / scale)
            .fold(0.0, f64::max)
    }
}

/// Gap, interaction strength and projector distance for a register.
pub fn diagnostics(h: &KronSum, reg: &QubitRegister, eig: &EigenSolution) -> Result<ReductionDiagnostics> {
    let s = 1usize << reg.n_qubits();
    let d0 = h
        .diag
        .as_ref()
        .ok_or_else(|| Error::Numeric("composite Hamiltonian has no unperturbed diagonal".into()))?;
    let mut sorted: Vec<(f64, usize)> = d0.iter().enumerate().map(|(i, &e)| (e + h.constant, i)).collect();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    if sorted.len() <= s {
        return Err(Error::Usage(format!(
            "projected dimension {} leaves no complement to the qubit subspace",
            sorted.len()
        )));
    }
    let gap = sorted[s].0 - sorted[s - 1].0;
    let mut low: Vec<usize> = sorted[..s].iter().map(|x| x.1).collect();
    low.sort_unstable();
    let mut sub = reg.subspace.clone();
    sub.sort_unstable();
    let subspace_is_lowest = low == sub;

    let mut hint = h.clone();
    hint.diag = None;
    hint.constant = 0.0;
    let interaction_norm = op_norm_power(&hint, 20, 1e-6);

    let projector_distance = projector_distance(reg, eig)?;
    let qs: Vec<Vec<f64>> = reg.qubits.iter().map(|&i| reg.energies[i].clone()).collect();
    let cs: Vec<Vec<f64>> = reg.couplers.iter().map(|&i| reg.energies[i].clone()).collect();
    let gap_lines = gap_check(&qs, &cs, gap).lines;
    Ok(ReductionDiagnostics {
        gap,
        interaction_norm,
        projector_distance,
        subspace_is_lowest,
        gap_lines,
        unitarity: None,
        conjugation: None,
    })
}

/// ||P - P0||_op for equal-rank projectors: the sine of the largest
/// principal angle between the two subspaces.
pub fn projector_distance(reg: &QubitRegister, eig: &EigenSolution) -> Result<f64> {
    let s = reg.subspace.len();
    if eig.k() < s {
        return Err(Error::Numeric(format!(
            "{} eigenvectors available, {s} needed",
            eig.k()
        )));
    }
    let o = CMat::from_fn(s, s, |a, k| eig.vectors[(reg.subspace[a], k)]);
    let smin = singular_values(&o).last().cloned().unwrap_or(0.0).min(1.0);
    Ok((1.0 - smin * smin).max(0.0).sqrt())
}

/// Direct rotation between P = span(eigvecs) and P0 = span(B0), restricted
/// to the subspace Q spanned by both; returns (U_Q, A, B) with A, B the
/// coordinates of the B0 and eigenvector columns in Q.
fn direct_rotation(reg: &QubitRegister, eig: &EigenSolution) -> Result<(CMat, CMat, CMat)> {
    let s = reg.subspace.len();
    let d = reg.dim();
    let mut y = CMat::zeros(d, 2 * s);
    for (a, &b) in reg.subspace.iter().enumerate() {
        y[(b, a)] = c(1.0);
    }
    for k in 0..s {
        y.column_mut(s + k).copy_from(&eig.vectors.column(k));
    }
    let q = orthonormal_columns(&y, 1e-10);
    let a = q.adjoint() * y.columns(0, s);
    let bm = q.adjoint() * eig.vectors.columns(0, s);
    let m = q.ncols();
    let id = CMat::identity(m, m);
    let r0 = &a * a.adjoint() * c(2.0) - &id;
    let r1 = &bm * bm.adjoint() * c(2.0) - &id;
    let x = r0 * r1;
    // U = sqrt(X) = (I + X) (2I + X + X^dagger)^(-1/2) for unitary X without -1 eigenvalues
    let sum = &id * c(2.0) + &x + x.adjoint();
    let (w, _) = eigh(&sum);
    let wmin = w.first().cloned().unwrap_or(0.0);
    if wmin <= 1e-12 {
        return Err(Error::Validity(
            "projector distance reached 1: the direct rotation is undefined".into(),
        ));
    }
    let u = (&id + &x) * herm_fn(&sum, |t| 1.0 / t.sqrt());
    Ok((u, a, bm))
}

/// Schrieffer-Wolff reduction of a composite Hamiltonian onto the register's
/// computational subspace.
pub fn schrieffer_wolff_reduction(h: &KronSum, reg: &QubitRegister, eig: &EigenSolution) -> Result<MultiReduction> {
    let s = reg.subspace.len();
    let mut diag = diagnostics(h, reg, eig)?;
    if diag.projector_distance >= 1.0 - 1e-12 {
        return Err(Error::Validity(format!(
            "projector distance {:.6} is not below 1: the direct rotation is undefined",
            diag.projector_distance
        )));
    }
    let (u, a, bm) = direct_rotation(reg, eig)?;
    let m = u.nrows();
    diag.unitarity = Some(op_norm_dense(&(u.adjoint() * &u - CMat::identity(m, m))));
    let p = &bm * bm.adjoint();
    let p0 = &a * a.adjoint();
    diag.conjugation = Some(op_norm_dense(&(&u * p * u.adjoint() - p0)));

    let e: Vec<f64> = eig.values[..s].to_vec();
    let mm = a.adjoint() * &u * &bm;
    let dmat = CMat::from_diagonal(&DVector::from_iterator(s, e.iter().map(|&x| c(x))));
    let hq0 = &mm * dmat * mm.adjoint();
    let uc = reg.comp_unitary();
    let hc = uc.adjoint() * hq0 * &uc;
    let hc = (&hc + hc.adjoint()) * c(0.5);
    let hamiltonian = gauge_fix(&pauli_decompose(&hc)?);
    let hq = pauli_reconstruct(&hamiltonian);
    let mut warnings = Vec::new();
    if diag.interaction_norm >= 0.5 * diag.gap {
        warnings.push(format!(
            "interaction norm {:.4} GHz is not below half the unperturbed gap {:.4} GHz",
            diag.interaction_norm, diag.gap
        ));
    }
    if !diag.subspace_is_lowest {
        warnings.push("the computational product states are not the lowest unperturbed states".into());
    }
    Ok(MultiReduction {
        hamiltonian,
        hq,
        diagnostics: diag,
        energies: e,
        warnings,
    })
}
