//! Netlist to operators: Hamiltonians, observables and the projected
//! composite Hamiltonian of coupled systems.

use rayon::prelude::*;

use crate::circuit::{
    assemble_coupled_symbolic, assemble_symbolic_hamiltonian, CircuitSpec, CoupledSystemSpec, Element, Interaction,
    ObservableSpec, OperatorKind, Role, SymbolicHamiltonian,
};
use crate::linalg::{c, CMat, LinearOperator, C64};
use crate::operators::{
    assemble_hamiltonian, mode_bases, project_low_energy, project_operator, KronSum, ModeBasis, ProjectedCircuit, Which,
};
use crate::spectra::{lowest_eigenpairs, EigenSolution, SolverOptions};
use crate::units::PHI0;
use crate::{Error, Result};

/// Measurement observable kind: loop current (flux qubits) or island charge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObservableKind {
    Flux,
    Charge,
}

#[derive(Debug, Clone)]
pub struct CircuitModel {
    pub spec: CircuitSpec,
    pub sym: SymbolicHamiltonian,
    pub bases: Vec<ModeBasis>,
    pub hamiltonian: KronSum,
}

impl CircuitModel {
    pub fn new(spec: &CircuitSpec) -> Result<Self> {
        Self::from_symbolic(spec, assemble_symbolic_hamiltonian(spec)?)
    }

    /// Model from a precomputed (for example loaded) symbolic Hamiltonian.
    pub fn from_symbolic(spec: &CircuitSpec, sym: SymbolicHamiltonian) -> Result<Self> {
        let bases = mode_bases(&sym, &spec.bases)?;
        let hamiltonian = assemble_hamiltonian(&sym, &bases)?;
        Ok(CircuitModel {
            spec: spec.clone(),
            sym,
            bases,
            hamiltonian,
        })
    }

    pub fn dims(&self) -> Vec<usize> {
        self.bases.iter().map(|b| b.dim()).collect()
    }

    pub fn dim(&self) -> usize {
        self.dims().iter().product()
    }

    /// Single-mode charge or flux matrix of `mode`.
    pub fn mode_operator(&self, mode: usize, kind: OperatorKind) -> Result<CMat> {
        let b = self
            .bases
            .get(mode)
            .ok_or_else(|| Error::Numeric(format!("mode {} out of range", mode + 1)))?;
        b.operator(match kind {
            OperatorKind::Charge => Which::Charge,
            OperatorKind::Flux => Which::Flux,
        })
    }

    /// Current through an inductive branch in nA, as a sum over modes.
    pub fn current_operator(&self, branch: usize) -> Result<KronSum> {
        let b = self
            .spec
            .branches
            .get(branch)
            .ok_or_else(|| Error::Netlist(format!("branch index {branch} out of range")))?;
        let l = match b.element {
            Element::Inductor { l } => l,
            _ => {
                return Err(Error::Netlist(format!(
                    "current observable needs an inductor, '{}' is not one",
                    b.id
                )))
            }
        };
        let t = self.spec.mode_transform();
        let n = self.spec.num_nodes();
        let mut op = KronSum::new(self.dims());
        for j in 0..n {
            // branch flux Phi_a - Phi_b in mode coordinates; inductors never carry closure flux
            let mut k = 0.0;
            if b.a > 0 {
                k += t[(b.a - 1, j)];
            }
            if b.b > 0 {
                k -= t[(b.b - 1, j)];
            }
            if k != 0.0 {
                let scale = PHI0 * k / (l * 1e-12) * 1e9;
                op.push_single(scale, j, &self.mode_operator(j, OperatorKind::Flux)?);
            }
        }
        Ok(op)
    }

    /// Charge of a mode in units of 2e.
    pub fn charge_operator(&self, mode: usize) -> Result<KronSum> {
        let mut op = KronSum::new(self.dims());
        op.push_single(1.0, mode, &self.mode_operator(mode, OperatorKind::Charge)?);
        Ok(op)
    }

    /// The netlist's measurement observable.
    pub fn observable(&self) -> Result<(ObservableKind, KronSum)> {
        match &self.spec.observable {
            Some(ObservableSpec::Current { branch }) => Ok((ObservableKind::Flux, self.current_operator(*branch)?)),
            Some(ObservableSpec::Charge { mode }) => Ok((ObservableKind::Charge, self.charge_operator(*mode)?)),
            None => Err(Error::Netlist(format!(
                "circuit '{}' declares no observable",
                self.spec.name
            ))),
        }
    }

    pub fn solve(&self, k: usize, opts: &SolverOptions) -> Result<EigenSolution> {
        lowest_eigenpairs(&self.hamiltonian, k, opts)
    }
}

/// V^dagger O V for eigenvector columns V.
pub fn project(op: &dyn LinearOperator, v: &CMat) -> CMat {
    let (n, k) = v.shape();
    let mut ov = CMat::zeros(n, k);
    let mut y = vec![c(0.0); n];
    for j in 0..k {
        let x: Vec<C64> = v.column(j).iter().cloned().collect();
        op.apply(&x, &mut y);
        for i in 0..n {
            ov[(i, j)] = y[i];
        }
    }
    v.adjoint() * ov
}

/// One circuit of a coupled system after diagonalization.
#[derive(Debug, Clone)]
pub struct SolvedCircuit {
    pub role: Role,
    pub eig: EigenSolution,
    pub projected: ProjectedCircuit,
    /// observable in the kept eigenbasis, when the circuit declares one
    pub observable: Option<(ObservableKind, CMat)>,
}

#[derive(Debug, Clone)]
pub struct CoupledModel {
    pub spec: CoupledSystemSpec,
    /// statically loaded circuits
    pub circuits: Vec<CircuitModel>,
    pub interactions: Vec<Interaction>,
}

impl CoupledModel {
    pub fn new(spec: &CoupledSystemSpec) -> Result<Self> {
        let cs = assemble_coupled_symbolic(spec)?;
        let circuits = spec
            .circuits
            .iter()
            .zip(cs.circuits)
            .map(|(sc, sym)| CircuitModel::from_symbolic(&sc.spec, sym))
            .collect::<Result<Vec<_>>>()?;
        Ok(CoupledModel {
            spec: spec.clone(),
            circuits,
            interactions: cs.interactions,
        })
    }

    pub fn keep(&self) -> Vec<usize> {
        self.spec.circuits.iter().map(|c| c.keep).collect()
    }

    /// Diagonalize every loaded circuit and express the operators entering
    /// interactions, and each observable, in its kept eigenbasis.
    pub fn solve_circuits(&self, opts: &SolverOptions) -> Result<Vec<SolvedCircuit>> {
        (0..self.circuits.len())
            .into_par_iter()
            .map(|i| self.solve_circuit(i, opts))
            .collect()
    }

    fn solve_circuit(&self, i: usize, opts: &SolverOptions) -> Result<SolvedCircuit> {
        let m = &self.circuits[i];
        let keep = self.spec.circuits[i].keep;
        let dim = m.dim();
        if keep > dim {
            return Err(Error::Usage(format!(
                "circuit '{}' keeps {keep} states but has dimension {dim}",
                m.spec.name
            )));
        }
        let eig = if keep == dim {
            full_dense(&m.hamiltonian, opts)?
        } else {
            lowest_eigenpairs(&m.hamiltonian, keep, opts)?
        };
        let dims = m.dims();
        let n = m.spec.num_nodes();
        let mut charge = vec![None; n];
        let mut flux = vec![None; n];
        for it in &self.interactions {
            for (ci, mode) in [(it.a, it.mode_a), (it.b, it.mode_b)] {
                if ci != i {
                    continue;
                }
                let slot = match it.kind {
                    OperatorKind::Charge => &mut charge[mode],
                    OperatorKind::Flux => &mut flux[mode],
                };
                if slot.is_none() {
                    *slot = Some(project_operator(
                        &dims,
                        mode,
                        &m.mode_operator(mode, it.kind)?,
                        &eig.vectors,
                    ));
                }
            }
        }
        let observable = match m.spec.observable {
            Some(_) => {
                let (kind, op) = m.observable()?;
                Some((kind, project(&op, &eig.vectors)))
            }
            None => None,
        };
        let projected = ProjectedCircuit {
            energies: eig.values.clone(),
            charge,
            flux,
        };
        Ok(SolvedCircuit {
            role: self.spec.circuits[i].role,
            eig,
            projected,
            observable,
        })
    }

    /// Composite Hamiltonian in the product of kept eigenbases.
    pub fn composite(&self, solved: &[SolvedCircuit]) -> Result<KronSum> {
        let p: Vec<ProjectedCircuit> = solved.iter().map(|s| s.projected.clone()).collect();
        project_low_energy(&p, &self.interactions)
    }
}

/// All eigenpairs when the kept count equals the dimension.
fn full_dense(h: &KronSum, opts: &SolverOptions) -> Result<EigenSolution> {
    let (w, v) = crate::linalg::eigh(&h.to_dense());
    let scale = w.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let k = w.len();
    Ok(EigenSolution {
        degenerate: vec![false; k],
        residuals: vec![0.0; k],
        values: w,
        vectors: v,
        iterations: 0,
        tol: opts.tol,
        norm_estimate: scale,
        solver: crate::spectra::SolverKind::Dense,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::parse_netlist;
    use crate::linalg::eigh;

    const RF: &str = r#"{"name":"rf","params":{"fz":"0.5 Phi0"},"nodes":[1],
        "branches":[{"id":"L","nodes":[1,0],"type":"inductor","value":"2.5 nH"},
                    {"id":"J","nodes":[1,0],"type":"junction","ej":"125 GHz","cap":"5 fF"}],
        "fluxes":{"J":"fz"},"modes":{"bases":[{"kind":"ho","nmax":40}]},
        "observable":{"kind":"current","branch":"L"}}"#;

    #[test]
    fn rf_current_is_odd_at_symmetry_point() {
        let spec = parse_netlist(RF).unwrap().single().unwrap();
        let m = CircuitModel::new(&spec).unwrap();
        let sol = m.solve(2, &SolverOptions::default()).unwrap();
        let (kind, o) = m.observable().unwrap();
        assert_eq!(kind, ObservableKind::Flux);
        let op = project(&o, &sol.vectors);
        // at half flux the two lowest states carry no net current but mix strongly
        assert!(op[(0, 0)].norm() < 1e-6 * op[(0, 1)].norm());
        assert!(op[(1, 1)].norm() < 1e-6 * op[(0, 1)].norm());
        assert!(op[(0, 1)].norm() > 10.0);
    }

    #[test]
    fn coupled_full_keep_matches_direct_product() {
        // two rf-SQUIDs with a mutual; keeping every state gives the exact composite spectrum
        let text = r#"{"name":"pair","circuits":[
            {"name":"a","nodes":[1],"branches":[{"id":"L","nodes":[1,0],"type":"inductor","value":"400 pH"},
              {"id":"J","nodes":[1,0],"type":"junction","ej":"300 GHz","cap":"20 fF"}],
              "fluxes":{"J":"0.5 Phi0"},"modes":{"bases":[{"kind":"ho","nmax":11}]},"role":"qubit","keep":12,
              "observable":{"kind":"current","branch":"L"}},
            {"name":"b","nodes":[1],"branches":[{"id":"L","nodes":[1,0],"type":"inductor","value":"420 pH"},
              {"id":"J","nodes":[1,0],"type":"junction","ej":"280 GHz","cap":"22 fF"}],
              "fluxes":{"J":"0.49 Phi0"},"modes":{"bases":[{"kind":"ho","nmax":11}]},"role":"qubit","keep":12,
              "observable":{"kind":"current","branch":"L"}}],
            "couplings":[{"type":"mutual","id":"M","a":"a.L","b":"b.L","value":"20 pH"}]}"#;
        let spec = parse_netlist(text).unwrap().coupled().unwrap();
        let cm = CoupledModel::new(&spec).unwrap();
        let solved = cm.solve_circuits(&SolverOptions::default()).unwrap();
        let h = cm.composite(&solved).unwrap();
        // direct: loaded single-circuit operators plus the interaction in the raw product basis
        let mut direct = KronSum::new(vec![12, 12]);
        for (i, c) in cm.circuits.iter().enumerate() {
            let d = c.hamiltonian.to_dense();
            direct.push_single(1.0, i, &d);
        }
        for it in &cm.interactions {
            let fa = cm.circuits[it.a].mode_operator(it.mode_a, it.kind).unwrap();
            let fb = cm.circuits[it.b].mode_operator(it.mode_b, it.kind).unwrap();
            direct.push(
                c(it.coeff),
                vec![
                    (it.a, std::sync::Arc::new(crate::operators::Factor::new(&fa))),
                    (it.b, std::sync::Arc::new(crate::operators::Factor::new(&fb))),
                ],
            );
        }
        let (w1, _) = eigh(&h.to_dense());
        let (w2, _) = eigh(&direct.to_dense());
        for k in 0..10 {
            assert!(
                (w1[k] - w2[k]).abs() < 1e-9 * w2[k].abs().max(1.0),
                "{k}: {} {}",
                w1[k],
                w2[k]
            );
        }
        assert!(!cm.interactions.is_empty());
    }
}
