use nalgebra::DVector;

use super::pauli::{gauge_fix, pauli_decompose, pauli_reconstruct, y_rotation, PauliHamiltonian};
use super::register::QubitRegister;
use super::swt::{diagnostics, MultiReduction};
use crate::linalg::{c, orthonormal_columns, CMat};
use crate::operators::KronSum;
use crate::spectra::EigenSolution;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationOptions {
    /// allowed |sum_i R1_ij^2 - 1| per column
    pub normality_tol: f64,
    /// fail instead of warn when a column exceeds the tolerance
    pub strict: bool,
}

impl Default for RotationOptions {
    fn default() -> Self {
        RotationOptions {
            normality_tol: 0.1,
            strict: false,
        }
    }
}

/// Approximate-rotation reduction: overlaps of the low circuit eigenstates
/// with the computational product states, orthonormalized column by column.
pub fn approximate_rotation_reduction(
    h: &KronSum,
    reg: &QubitRegister,
    eig: &EigenSolution,
    opts: &RotationOptions,
) -> Result<(MultiReduction, Vec<f64>)> {
    let s = reg.subspace.len();
    let diag = diagnostics(h, reg, eig)?;
    let vscale = eig.vectors.iter().fold(0.0f64, |a, x| a.max(x.norm()));
    let imag = eig.vectors.columns(0, s).iter().fold(0.0f64, |a, x| a.max(x.im.abs()));
    if imag > 1e-10 * vscale {
        return Err(Error::Unsupported(format!(
            "approximate rotation needs a real Hamiltonian (eigenvector imaginary part {imag:.2e})"
        )));
    }
    // R1[i, j] = <E_i | b_j>
    let r1 = CMat::from_fn(s, s, |i, j| eig.vectors[(reg.subspace[j], i)].conj());
    let norms: Vec<f64> = (0..s)
        .map(|j| r1.column(j).iter().map(|x| x.norm_sqr()).sum())
        .collect();
    let mut warnings = Vec::new();
    for (j, &nj) in norms.iter().enumerate() {
        if (nj - 1.0).abs() > opts.normality_tol {
            let msg = format!("column {j} of the overlap matrix has squared norm {nj:.4}");
            if opts.strict {
                return Err(Error::Validity(msg));
            }
            warnings.push(msg);
        }
    }
    // Gram-Schmidt in ascending unperturbed energy
    let d0 = h
        .diag
        .as_ref()
        .ok_or_else(|| Error::Numeric("composite Hamiltonian has no unperturbed diagonal".into()))?;
    let mut order: Vec<usize> = (0..s).collect();
    order.sort_by(|&a, &b| d0[reg.subspace[a]].partial_cmp(&d0[reg.subspace[b]]).unwrap());
    let sorted = CMat::from_fn(s, s, |i, k| r1[(i, order[k])]);
    let q = orthonormal_columns(&sorted, 1e-12);
    if q.ncols() < s {
        return Err(Error::Validity("overlap matrix is rank deficient".into()));
    }
    let mut t = CMat::zeros(s, s);
    for (k, &j) in order.iter().enumerate() {
        t.column_mut(j).copy_from(&q.column(k));
    }
    let e: Vec<f64> = eig.values[..s].to_vec();
    let dmat = CMat::from_diagonal(&DVector::from_iterator(s, e.iter().map(|&x| c(x))));
    let h0 = t.adjoint() * dmat * &t;
    let uc = reg.comp_unitary();
    let hc = uc.adjoint() * h0 * &uc;
    let hc = (&hc + hc.adjoint()) * c(0.5);
    let hamiltonian = gauge_fix(&pauli_decompose(&hc)?);
    let hq = pauli_reconstruct(&hamiltonian);
    Ok((
        MultiReduction {
            hamiltonian,
            hq,
            diagnostics: diag,
            energies: e,
            warnings,
        },
        norms,
    ))
}

/// Per-qubit y rotations nulling h_xz and h_zx of a two-qubit Hamiltonian.
pub fn remove_mixed_two_local(p: &PauliHamiltonian) -> Result<(PauliHamiltonian, [f64; 2])> {
    if p.n != 2 {
        return Err(Error::Usage(format!("mixed-term removal needs 2 qubits, got {}", p.n)));
    }
    let scale = p.scale().max(f64::MIN_POSITIVE);
    let tol = 1e-12 * scale;
    let apply = |t: [f64; 2]| p.rotate_qubit(0, &y_rotation(t[0])).rotate_qubit(1, &y_rotation(t[1]));
    let resid = |t: [f64; 2]| {
        let r = apply(t);
        [r.get("xz"), r.get("zx")]
    };
    let mut t = [0.0, 0.0];
    let mut f = resid(t);
    for _ in 0..100 {
        let fn0 = f[0].hypot(f[1]);
        if fn0 <= tol {
            return Ok((apply(t), t));
        }
        let h = 1e-6;
        let mut j = [[0.0; 2]; 2];
        for k in 0..2 {
            let mut tp = t;
            let mut tm = t;
            tp[k] += h;
            tm[k] -= h;
            let (fp, fm) = (resid(tp), resid(tm));
            j[0][k] = (fp[0] - fm[0]) / (2.0 * h);
            j[1][k] = (fp[1] - fm[1]) / (2.0 * h);
        }
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det.abs() < 1e-300 {
            break;
        }
        let dx = [
            (j[1][1] * f[0] - j[0][1] * f[1]) / det,
            (-j[1][0] * f[0] + j[0][0] * f[1]) / det,
        ];
        // damped step: halve until the residual decreases
        let mut lam = 1.0;
        loop {
            let tn = [t[0] - lam * dx[0], t[1] - lam * dx[1]];
            let fnew = resid(tn);
            if fnew[0].hypot(fnew[1]) < fn0 || lam < 1e-6 {
                t = tn;
                f = fnew;
                break;
            }
            lam *= 0.5;
        }
    }
    if f[0].hypot(f[1]) <= tol.max(1e-10 * scale) {
        return Ok((apply(t), t));
    }
    Err(Error::NoConvergence {
        iterations: 100,
        worst_residual: f[0].abs().max(f[1].abs()),
        residuals: f.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eigh;

    #[test]
    fn already_clean_is_identity() {
        let mut p = PauliHamiltonian::zeros(2);
        p.set("zz", 1.0).unwrap();
        p.set("xI", -0.5).unwrap();
        let (r, t) = remove_mixed_two_local(&p).unwrap();
        assert_eq!(t, [0.0, 0.0]);
        assert_eq!(r, p);
    }

    #[test]
    fn mixed_terms_removed_and_spectrum_kept() {
        let mut p = PauliHamiltonian::zeros(2);
        for (l, v) in [
            ("zI", -0.12),
            ("Iz", -0.1),
            ("xI", -0.5),
            ("Ix", -0.5),
            ("xx", -0.4),
            ("yy", 0.5),
            ("zz", 1.0),
            ("xz", 0.08),
            ("zx", 0.06),
        ] {
            p.set(l, v).unwrap();
        }
        let (r, _) = remove_mixed_two_local(&p).unwrap();
        assert!(r.get("xz").abs() < 1e-11 && r.get("zx").abs() < 1e-11);
        let (w0, _) = eigh(&pauli_reconstruct(&p));
        let (w1, _) = eigh(&pauli_reconstruct(&r));
        for k in 0..4 {
            assert!((w0[k] - w1[k]).abs() < 1e-12);
        }
    }
}
