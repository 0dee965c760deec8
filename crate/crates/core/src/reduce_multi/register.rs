use std::sync::Arc;

use crate::circuit::Role;
use crate::linalg::{c, kron, CMat, C64, I};
use crate::model::{ObservableKind, SolvedCircuit};
use crate::operators::{Factor, KronSum};
use crate::reduce_single::{local_reduction_projected, ComputationalBasis1Q, LocalOptions, PauliCoefficients1Q};
use crate::{Error, Result};

/// Default cap on the projected composite dimension.
pub const DEFAULT_DIM_CAP: usize = 20_000;

/// Qubits and couplers of a composite system in the product of their kept
/// eigenbases (circuit order, last circuit fastest).
#[derive(Debug, Clone)]
pub struct QubitRegister {
    pub dims: Vec<usize>,
    pub roles: Vec<Role>,
    /// circuit indices of the qubits, in register order
    pub qubits: Vec<usize>,
    pub couplers: Vec<usize>,
    /// kept energies per circuit
    pub energies: Vec<Vec<f64>>,
    /// projected observable per qubit (keep x keep)
    pub observables: Vec<(ObservableKind, CMat)>,
    /// local computational basis of each loaded qubit
    pub bases: Vec<ComputationalBasis1Q>,
    /// local reduction of each loaded qubit on its own
    pub single: Vec<PauliCoefficients1Q>,
    /// product index of each computational state, qubit 0 most significant
    pub subspace: Vec<usize>,
}

impl QubitRegister {
    pub fn new(solved: &[SolvedCircuit], opts: &LocalOptions, dim_cap: usize) -> Result<Self> {
        let dims: Vec<usize> = solved.iter().map(|s| s.eig.k()).collect();
        let total: usize = dims.iter().product();
        if total > dim_cap {
            return Err(Error::Usage(format!(
                "projected dimension {total} exceeds the cap {dim_cap}"
            )));
        }
        let roles: Vec<Role> = solved.iter().map(|s| s.role).collect();
        let qubits: Vec<usize> = (0..solved.len()).filter(|&i| roles[i] == Role::Qubit).collect();
        let couplers: Vec<usize> = (0..solved.len()).filter(|&i| roles[i] == Role::Coupler).collect();
        if qubits.is_empty() {
            return Err(Error::Usage("composite system has no qubit".into()));
        }
        let mut observables = Vec::new();
        let mut bases = Vec::new();
        let mut single = Vec::new();
        for &q in &qubits {
            if dims[q] < 2 {
                return Err(Error::Usage(format!(
                    "qubit circuit {} keeps fewer than 2 states",
                    q + 1
                )));
            }
            let (kind, o) = solved[q]
                .observable
                .clone()
                .ok_or_else(|| Error::Netlist(format!("qubit circuit {} declares no observable", q + 1)))?;
            let e = &solved[q].eig.values;
            let o2 = o.view((0, 0), (2, 2)).into_owned();
            let (h, b) = local_reduction_projected([e[0], e[1]], &o2, kind, opts)?;
            observables.push((kind, o));
            bases.push(b);
            single.push(h);
        }
        let n = qubits.len();
        let subspace = (0..1usize << n)
            .map(|a| {
                let mut idx = 0;
                for (ci, &d) in dims.iter().enumerate() {
                    let digit = match qubits.iter().position(|&q| q == ci) {
                        Some(k) => (a >> (n - 1 - k)) & 1,
                        None => 0,
                    };
                    idx = idx * d + digit;
                }
                idx
            })
            .collect();
        let energies = solved.iter().map(|s| s.eig.values.clone()).collect();
        Ok(QubitRegister {
            dims,
            roles,
            qubits,
            couplers,
            energies,
            observables,
            bases,
            single,
            subspace,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.qubits.len()
    }

    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// Kronecker product of the per-qubit local unitaries (2^N x 2^N).
    pub fn comp_unitary(&self) -> CMat {
        self.bases
            .iter()
            .fold(CMat::identity(1, 1), |acc, b| kron(&acc, &b.unitary()))
    }

    /// Local sigma_{x,y,z} of qubit `q` on its computational states,
    /// embedded in the product basis and zero outside the kept qubit levels.
    pub fn pauli_operator(&self, q: usize, which: char) -> Result<KronSum> {
        let s = match which {
            'x' => [c(0.0), c(1.0), c(1.0), c(0.0)],
            'y' => [c(0.0), -I, I, c(0.0)],
            'z' => [c(1.0), c(0.0), c(0.0), c(-1.0)],
            _ => return Err(Error::Usage(format!("unknown Pauli '{which}'"))),
        };
        let s = CMat::from_row_slice(2, 2, &s);
        let u = self.bases[q].unitary();
        // in the {|E0>, |E1>} basis the computational Pauli is U s U^dagger
        let m2 = &u * s * u.adjoint();
        let d = self.dims[self.qubits[q]];
        let mut m = CMat::zeros(d, d);
        m.view_mut((0, 0), (2, 2)).copy_from(&m2);
        let mut op = KronSum::new(self.dims.clone());
        op.push_single(1.0, self.qubits[q], &m);
        Ok(op)
    }

    /// P0: kept qubit levels 0/1 and coupler ground states, as a product term.
    pub fn p0(&self) -> KronSum {
        let mut op = KronSum::new(self.dims.clone());
        let factors = self
            .dims
            .iter()
            .enumerate()
            .map(|(ci, &d)| {
                let keep = if self.roles[ci] == Role::Qubit { 2 } else { 1 };
                let m = CMat::from_fn(d, d, |i, j| if i == j && i < keep { c(1.0) } else { c(0.0) });
                (ci, Arc::new(Factor::new(&m)))
            })
            .collect();
        op.push(c(1.0), factors);
        op
    }

    /// Embed qubit `q`'s projected observable in the product basis.
    pub fn observable_operator(&self, q: usize) -> KronSum {
        let mut op = KronSum::new(self.dims.clone());
        op.push_single(1.0, self.qubits[q], &self.observables[q].1);
        op
    }

    /// Amplitudes of a product-basis state on the computational states.
    pub fn restrict(&self, x: &[C64]) -> Vec<C64> {
        self.subspace.iter().map(|&i| x[i]).collect()
    }
}

/// One line of the gap inequality system.
#[derive(Debug, Clone, PartialEq)]
pub struct GapLine {
    pub label: String,
    pub value: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapCheck {
    pub lines: Vec<GapLine>,
    /// largest Delta for which every line holds
    pub implied_delta: f64,
}

/// Evaluate |dE_{i,2} - sum_j dE_{j,1}| and |dE_{ci,1} - sum_j dE_{j,1}|
/// against `delta`, with dE_{i,j} = E_{i,j} - E_{i,0}.
pub fn gap_check(qubits: &[Vec<f64>], couplers: &[Vec<f64>], delta: f64) -> GapCheck {
    let mut lines = Vec::new();
    let sum1: f64 = qubits.iter().filter(|e| e.len() > 1).map(|e| e[1] - e[0]).sum();
    for (i, e) in qubits.iter().enumerate() {
        if e.len() < 3 {
            continue;
        }
        let v = (e[2] - e[0] - sum1).abs();
        lines.push(GapLine {
            label: format!("qubit {}", i + 1),
            value: v,
            pass: v >= delta,
        });
    }
    for (i, e) in couplers.iter().enumerate() {
        if e.len() < 2 {
            continue;
        }
        let v = (e[1] - e[0] - sum1).abs();
        lines.push(GapLine {
            label: format!("coupler {}", i + 1),
            value: v,
            pass: v >= delta,
        });
    }
    let implied_delta = lines.iter().map(|l| l.value).fold(f64::INFINITY, f64::min);
    GapCheck { lines, implied_delta }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_qubit_reduces_to_second_gap() {
        // dE_2 - dE_1 = E_2 - E_1
        let g = gap_check(&[vec![0.0, 1.0, 3.5]], &[], 3.0);
        assert_eq!(g.lines.len(), 1);
        assert!((g.implied_delta - 2.5).abs() < 1e-15);
        assert!(!g.lines[0].pass);
    }

    #[test]
    fn identical_qubits_arithmetic() {
        let q = vec![0.0, 1.0, 10.0];
        let g = gap_check(&[q.clone(), q], &[vec![0.0, 5.0]], 3.0);
        assert_eq!(g.lines[0].value, 8.0);
        assert_eq!(g.lines[2].value, 3.0);
        assert!(g.lines.iter().all(|l| l.pass));
        assert_eq!(g.implied_delta, 3.0);
    }
}
