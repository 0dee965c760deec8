use std::sync::Arc;

use super::pauli::PauliHamiltonian;
use super::register::QubitRegister;
use crate::linalg::{c, dot, eigh, CMat, LinearOperator, C64};
use crate::model::{project, ObservableKind};
use crate::operators::{Factor, KronSum};
use crate::spectra::EigenSolution;
use crate::{Error, Result};

/// Default fraction of the single-qubit |o0| an expectation must exceed.
pub const SIGN_THRESHOLD: f64 = 0.1;

fn expectation(op: &KronSum, x: &[C64]) -> f64 {
    let mut y = vec![c(0.0); x.len()];
    op.apply(x, &mut y);
    dot(x, &y).re
}

/// Levels closer than this times max|E| are resolved as one cluster.
pub const CLUSTER_TOL: f64 = 1e-8;

fn mid_point(reg: &QubitRegister, q: usize) -> f64 {
    let b = &reg.bases[q];
    match b.kind {
        ObservableKind::Flux => 0.0,
        ObservableKind::Charge => 0.5 * (b.o0 + b.o1),
    }
}

/// The lowest `s` eigenvectors, with every quasi-degenerate cluster rotated
/// onto the eigenbasis of a weighted sum of the normalized qubit observables.
fn resolved_vectors(eig: &EigenSolution, reg: &QubitRegister, ops: &[KronSum], s: usize) -> CMat {
    let mut v = eig.vectors.columns(0, s).into_owned();
    let scale = eig.values[..s]
        .iter()
        .fold(0.0f64, |a, e| a.max(e.abs()))
        .max(f64::MIN_POSITIVE);
    let n = ops.len();
    let mut start = 0;
    while start < s {
        let mut end = start + 1;
        while end < s && eig.values[end] - eig.values[end - 1] <= CLUSTER_TOL * scale {
            end += 1;
        }
        if end - start > 1 {
            let x = v.columns(start, end - start).into_owned();
            let m = end - start;
            let mut a = CMat::zeros(m, m);
            for (q, op) in ops.iter().enumerate() {
                let mid = mid_point(reg, q);
                let norm = (reg.bases[q].o0 - mid).abs().max(f64::MIN_POSITIVE);
                let w = (1u64 << (n - 1 - q)) as f64 / norm;
                a += (project(op, &x) - CMat::identity(m, m) * c(mid)) * c(w);
            }
            let (_, r) = eigh(&((&a + a.adjoint()) * c(0.5)));
            v.columns_mut(start, m).copy_from(&(x * r));
        }
        start = end;
    }
    v
}

/// Sign pattern of every low eigenstate (bit set = negative observable),
/// qubit 0 most significant. Degenerate levels are first resolved in the
/// observables' eigenbasis.
pub fn sign_patterns(eig: &EigenSolution, reg: &QubitRegister, threshold: f64) -> Result<Vec<usize>> {
    let n = reg.n_qubits();
    let s = 1usize << n;
    if eig.k() < s {
        return Err(Error::Numeric(format!("{} eigenpairs available, {s} needed", eig.k())));
    }
    let ops: Vec<KronSum> = (0..n).map(|q| reg.observable_operator(q)).collect();
    let vecs = resolved_vectors(eig, reg, &ops, s);
    let mut seen = vec![false; s];
    let mut out = Vec::with_capacity(s);
    for k in 0..s {
        let x: Vec<C64> = vecs.column(k).iter().cloned().collect();
        let mut pat = 0;
        for (q, op) in ops.iter().enumerate() {
            let mid = mid_point(reg, q);
            let v = expectation(op, &x) - mid;
            let lim = threshold * (reg.bases[q].o0 - mid).abs();
            if v.abs() < lim {
                return Err(Error::Validity(format!(
                    "Hamiltonian not diagonal in computational basis: state {k} has <O_{}> = {v:.4e} within the threshold {lim:.4e}",
                    q + 1
                )));
            }
            pat = (pat << 1) | usize::from(v < 0.0);
        }
        if seen[pat] {
            return Err(Error::Validity(format!(
                "Hamiltonian not diagonal in computational basis: state {k} repeats sign pattern {pat:0n$b}"
            )));
        }
        seen[pat] = true;
        out.push(pat);
    }
    Ok(out)
}

/// Energies with given computational labels -> z/I-string coefficients.
pub fn diagonal_coefficients(n: usize, labelled: &[(usize, f64)]) -> PauliHamiltonian {
    let mut p = PauliHamiltonian::zeros(n);
    let s = 1usize << n;
    for mask in 0..s {
        // mask bit set = z on that qubit
        let mut digits = vec![0; n];
        for (q, d) in digits.iter_mut().enumerate() {
            if (mask >> (n - 1 - q)) & 1 == 1 {
                *d = 3;
            }
        }
        let v: f64 = labelled
            .iter()
            .map(|&(a, e)| if (a & mask).count_ones() % 2 == 0 { e } else { -e })
            .sum();
        let i = p.index(&digits);
        p.coeffs[i] = v / s as f64;
    }
    p
}

/// Diagonal-Hamiltonian reduction from the low eigenpairs' observable signs.
pub fn diagonal_reduction(eig: &EigenSolution, reg: &QubitRegister, threshold: f64) -> Result<PauliHamiltonian> {
    let pats = sign_patterns(eig, reg, threshold)?;
    let labelled: Vec<(usize, f64)> = pats.iter().zip(&eig.values).map(|(&p, &e)| (p, e)).collect();
    Ok(diagonal_coefficients(reg.n_qubits(), &labelled))
}

/// Probability of each sign pattern (bit set = negative) in a product-basis
/// state, from spectral projectors of the projected qubit observables.
pub fn computational_state_probabilities(state: &[C64], reg: &QubitRegister) -> Vec<f64> {
    let n = reg.n_qubits();
    let mut proj: Vec<[Arc<Factor>; 2]> = Vec::new();
    for q in 0..n {
        let o = &reg.observables[q].1;
        let mid = mid_point(reg, q);
        let (w, v) = eigh(&((o + o.adjoint()) * c(0.5)));
        let d = o.nrows();
        let mut pp = CMat::zeros(d, d);
        let mut pm = CMat::zeros(d, d);
        for k in 0..d {
            let col = v.column(k);
            let outer = &col * col.adjoint();
            if w[k] > mid {
                pp += outer;
            } else {
                pm += outer;
            }
        }
        proj.push([Arc::new(Factor::new(&pp)), Arc::new(Factor::new(&pm))]);
    }
    (0..1usize << n)
        .map(|a| {
            let mut op = KronSum::new(reg.dims.clone());
            let factors = (0..n)
                .map(|q| (reg.qubits[q], proj[q][(a >> (n - 1 - q)) & 1].clone()))
                .collect();
            op.push(c(1.0), factors);
            expectation(&op, state)
        })
        .collect()
}

/// |<a|psi_k>|^2 for the k-th eigenvector of a reduced Hamiltonian.
pub fn reduced_state_probabilities(hq: &CMat, k: usize) -> Vec<f64> {
    let (_, v) = eigh(hq);
    v.column(k).iter().map(|x| x.norm_sqr()).collect()
}

/// Outcome of the two-qubit non-stoquasticity condition.
#[derive(Debug, Clone, PartialEq)]
pub struct NonStoquastic {
    pub nonstoquastic: bool,
    /// first clause that failed
    pub failed_clause: Option<String>,
}

/// Two-qubit condition: every one-local x and z field nonzero and
/// |h_yy| > |h_xx|, |h_zz|. Other strings must be below `mixed_tol` times
/// the largest coefficient.
pub fn nonstoquastic_check(p: &PauliHamiltonian, mixed_tol: f64) -> Result<NonStoquastic> {
    if p.n != 2 {
        return Err(Error::Usage(format!(
            "the non-stoquasticity condition is stated for 2 qubits, got {}",
            p.n
        )));
    }
    let allowed = ["II", "xI", "Ix", "zI", "Iz", "xx", "yy", "zz"];
    let scale = p.scale();
    for i in 0..p.coeffs.len() {
        let l = p.label(i);
        if !allowed.contains(&l.as_str()) && p.coeffs[i].abs() > mixed_tol * scale {
            return Err(Error::Validity(format!(
                "condition not applicable: h_{l} = {:.4e} is not negligible",
                p.coeffs[i]
            )));
        }
    }
    let zero = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let fail = |clause: &str| {
        Ok(NonStoquastic {
            nonstoquastic: false,
            failed_clause: Some(clause.to_string()),
        })
    };
    for l in ["xI", "Ix", "zI", "Iz"] {
        if p.get(l).abs() <= zero {
            return fail(&format!("one-local field h_{l} vanishes"));
        }
    }
    let (xx, yy, zz) = (p.get("xx").abs(), p.get("yy").abs(), p.get("zz").abs());
    if yy <= xx {
        return fail("|h_yy| > |h_xx|");
    }
    if yy <= zz {
        return fail("|h_yy| > |h_zz|");
    }
    Ok(NonStoquastic {
        nonstoquastic: true,
        failed_clause: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two(entries: &[(&str, f64)]) -> PauliHamiltonian {
        let mut p = PauliHamiltonian::zeros(2);
        for &(l, v) in entries {
            p.set(l, v).unwrap();
        }
        p
    }

    #[test]
    fn diagonal_round_trip() {
        let h = [0.3, -0.7, 0.45, 1.2];
        // E_a = h_II + h_zI z1 + h_Iz z2 + h_zz z1 z2, z = +1 for bit 0
        let e: Vec<(usize, f64)> = (0..4)
            .map(|a| {
                let z1 = if a & 2 == 0 { 1.0 } else { -1.0 };
                let z2 = if a & 1 == 0 { 1.0 } else { -1.0 };
                (a, h[0] + h[1] * z1 + h[2] * z2 + h[3] * z1 * z2)
            })
            .collect();
        let p = diagonal_coefficients(2, &e);
        for (l, v) in ["II", "zI", "Iz", "zz"].iter().zip(h) {
            assert!((p.get(l) - v).abs() < 1e-15);
        }
        let flat = diagonal_coefficients(2, &[(0, 2.0), (1, 2.0), (2, 2.0), (3, 2.0)]);
        assert_eq!(flat.nonzero(1e-15), vec![("II".to_string(), 2.0)]);
    }

    #[test]
    fn nonstoquastic_clauses() {
        let reference = two(&[
            ("zI", -0.125),
            ("Iz", -0.121),
            ("xI", -0.516),
            ("Ix", -0.509),
            ("xx", -0.459),
            ("yy", 0.5),
            ("zz", 1.079),
        ]);
        let r = nonstoquastic_check(&reference, 0.05).unwrap();
        assert!(!r.nonstoquastic);
        assert_eq!(r.failed_clause.as_deref(), Some("|h_yy| > |h_zz|"));
        let r = nonstoquastic_check(&two(&[("xx", 1.0), ("yy", 2.0), ("zz", 1.0)]), 0.05).unwrap();
        assert!(r.failed_clause.unwrap().contains("one-local"));
        let s = two(&[
            ("xI", 0.1),
            ("Ix", 0.1),
            ("zI", 0.1),
            ("Iz", 0.1),
            ("xx", 1.0),
            ("yy", 2.0),
            ("zz", 1.0),
        ]);
        assert!(nonstoquastic_check(&s, 0.05).unwrap().nonstoquastic);
        let bad = two(&[("xz", 1.0), ("yy", 2.0)]);
        assert!(nonstoquastic_check(&bad, 0.05).is_err());
    }
}
