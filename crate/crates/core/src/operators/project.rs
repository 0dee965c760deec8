use std::sync::Arc;

use super::kron::{apply_mode, Factor, KronSum};
use crate::circuit::{Interaction, OperatorKind};
use crate::linalg::{c, CMat, C64};
use crate::{Error, Result};

/// A circuit reduced to its lowest eigenstates: energies plus the mode
/// operators that enter interaction terms, expressed in that eigenbasis.
#[derive(Debug, Clone)]
pub struct ProjectedCircuit {
    pub energies: Vec<f64>,
    pub charge: Vec<Option<CMat>>,
    pub flux: Vec<Option<CMat>>,
}

/// V^dagger (op on `mode`) V for eigenvector columns V.
pub fn project_operator(dims: &[usize], mode: usize, op: &CMat, v: &CMat) -> CMat {
    let f = Factor::new(op);
    let (n, k) = v.shape();
    let mut av = CMat::zeros(n, k);
    let mut y = vec![c(0.0); n];
    for j in 0..k {
        let x: Vec<C64> = v.column(j).iter().cloned().collect();
        apply_mode(dims, mode, &f, &x, &mut y);
        for i in 0..n {
            av[(i, j)] = y[i];
        }
    }
    v.adjoint() * av
}

/// Composite Hamiltonian in the product of per-circuit eigenbases: the summed
/// unperturbed energies on the diagonal plus the interaction terms.
pub fn project_low_energy(circuits: &[ProjectedCircuit], interactions: &[Interaction]) -> Result<KronSum> {
    let dims: Vec<usize> = circuits.iter().map(|p| p.energies.len()).collect();
    let total: usize = dims.iter().product();
    let mut diag = vec![0.0; total];
    let mut stride = 1;
    for k in (0..dims.len()).rev() {
        for (idx, d) in diag.iter_mut().enumerate() {
            *d += circuits[k].energies[(idx / stride) % dims[k]];
        }
        stride *= dims[k];
    }
    let mut h = KronSum::new(dims);
    h.diag = Some(diag);
    let get = |ci: usize, mode: usize, kind: OperatorKind| -> Result<Arc<Factor>> {
        let p = circuits
            .get(ci)
            .ok_or_else(|| Error::Numeric(format!("interaction references circuit {ci}")))?;
        let m = match kind {
            OperatorKind::Charge => p.charge.get(mode),
            OperatorKind::Flux => p.flux.get(mode),
        };
        match m {
            Some(Some(m)) => Ok(Arc::new(Factor::new(m))),
            _ => Err(Error::Numeric(format!(
                "missing projected operator for circuit {ci} mode {}",
                mode + 1
            ))),
        }
    };
    for it in interactions {
        let fa = get(it.a, it.mode_a, it.kind)?;
        let fb = get(it.b, it.mode_b, it.kind)?;
        h.push(c(it.coeff), vec![(it.a, fa), (it.b, fb)]);
    }
    Ok(h)
}
