//! Circuit netlists, capacitance / inverse-inductance matrices, inter-circuit
//! loading and the symbolic Hamiltonian term list.

mod coupled;
mod expr;
mod graph;
mod matrices;
pub mod netlist;
mod symbolic;

use std::collections::BTreeMap;

use nalgebra::DMatrix;

pub use coupled::{apply_coupling_loading, Loading};
pub use expr::LinExpr;
pub use graph::{auto_spanning_tree, branch_flux_map, BranchFlux};
pub use matrices::{build_capacitance_matrix, build_inverse_inductance_matrix, invert_capacitance};
pub use netlist::{load_netlist, parse_netlist, Netlist};
pub use symbolic::{
    assemble_coupled_symbolic, assemble_symbolic_hamiltonian, CosineTerm, CoupledSymbolic, Interaction, OperatorKind,
    SymbolicHamiltonian,
};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    /// Capacitance in fF.
    Capacitor { c: f64 },
    /// Inductance in pH.
    Inductor { l: f64 },
    /// Junction with Josephson energy (GHz) and parallel capacitance (fF).
    /// With `fx` set the element is a symmetric compound junction whose
    /// effective energy is `ej * cos(pi * fx)`.
    Junction { ej: f64, c: f64, fx: Option<LinExpr> },
}

impl Element {
    pub fn is_inductive(&self) -> bool {
        matches!(self, Element::Inductor { .. })
    }

    pub fn is_junction(&self) -> bool {
        matches!(self, Element::Junction { .. })
    }

    pub fn capacitance(&self) -> f64 {
        match self {
            Element::Capacitor { c } => *c,
            Element::Junction { c, .. } => *c,
            Element::Inductor { .. } => 0.0,
        }
    }
}

/// A two-terminal branch. Terminal 0 is ground, terminal k is the k-th node.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub id: String,
    pub a: usize,
    pub b: usize,
    pub element: Element,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurrentBias {
    pub node: usize,
    /// pH
    pub l: f64,
    /// A
    pub current: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VoltageBias {
    pub node: usize,
    /// fF
    pub cg: f64,
    /// V
    pub vg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BasisSpec {
    /// Oscillator number states 0..=nmax; impedance (Ohm) overrides the
    /// value derived from the mode's quadratic part.
    Ho { nmax: usize, impedance: Option<f64> },
    /// Charge states -cutoff..=cutoff shifted by `offset` (units of 2e).
    Charge { cutoff: usize, offset: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ObservableSpec {
    /// Current through an inductive branch (flux qubits).
    Current { branch: usize },
    /// Charge of a mode (charge qubits).
    Charge { mode: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Qubit,
    Coupler,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitSpec {
    pub name: String,
    /// External node labels; index k holds the label of node k+1.
    pub node_labels: Vec<i64>,
    pub branches: Vec<Branch>,
    /// User-supplied spanning tree (branch indices); automatic when `None`.
    pub tree: Option<Vec<usize>>,
    /// Closure-branch flux offsets in Phi0.
    pub fluxes: BTreeMap<usize, LinExpr>,
    pub params: BTreeMap<String, f64>,
    pub current_bias: Option<CurrentBias>,
    pub voltage_bias: Option<VoltageBias>,
    /// Node-to-mode transform T with phi_node = T * phi_mode (identity when `None`).
    pub modes: Option<DMatrix<f64>>,
    pub bases: Vec<BasisSpec>,
    pub observable: Option<ObservableSpec>,
}

impl CircuitSpec {
    pub fn num_nodes(&self) -> usize {
        self.node_labels.len()
    }

    pub fn branch_index(&self, id: &str) -> Option<usize> {
        self.branches.iter().position(|b| b.id == id)
    }

    pub fn mode_transform(&self) -> DMatrix<f64> {
        self.modes
            .clone()
            .unwrap_or_else(|| DMatrix::identity(self.num_nodes(), self.num_nodes()))
    }

    /// Spanning tree in use (user-supplied or automatic).
    pub fn spanning_tree(&self) -> Result<Vec<usize>> {
        match &self.tree {
            Some(t) => Ok(t.clone()),
            None => auto_spanning_tree(self),
        }
    }

    /// Eager structural validation; all problems are reported together.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        let n = self.num_nodes();
        if n == 0 {
            problems.push("circuit has no nodes".to_string());
        }
        let mut seen = std::collections::BTreeSet::new();
        for b in &self.branches {
            if !seen.insert(b.id.as_str()) {
                problems.push(format!("duplicate branch id '{}'", b.id));
            }
            if b.a > n || b.b > n {
                problems.push(format!("branch '{}' references an unknown node", b.id));
            }
            if b.a == b.b {
                problems.push(format!("branch '{}' connects a node to itself", b.id));
            }
            let bad = match &b.element {
                Element::Capacitor { c } => !(*c > 0.0),
                Element::Inductor { l } => !(*l > 0.0),
                Element::Junction { ej, c, .. } => !(*ej >= 0.0) || !(*c >= 0.0),
            };
            if bad {
                problems.push(format!("branch '{}' has a non-physical element value", b.id));
            }
        }
        if let Some(t) = &self.modes {
            if t.nrows() != n || t.ncols() != n {
                problems.push(format!("mode transform must be {n}x{n}"));
            } else if t.clone().try_inverse().is_none() {
                problems.push("mode transform is singular".to_string());
            }
        }
        if self.bases.len() != n {
            problems.push(format!("{} bases given for {} modes", self.bases.len(), n));
        }
        for (k, b) in self.bases.iter().enumerate() {
            if let BasisSpec::Ho { nmax, .. } = b {
                if *nmax < 2 {
                    problems.push(format!("mode {} oscillator basis needs nmax >= 2", k + 1));
                }
            }
        }
        if let Some(cb) = &self.current_bias {
            if cb.node == 0 || cb.node > n || !(cb.l > 0.0) {
                problems.push("current bias needs a valid node and positive inductance".to_string());
            }
        }
        if let Some(vb) = &self.voltage_bias {
            if vb.node == 0 || vb.node > n || !(vb.cg > 0.0) {
                problems.push("voltage bias needs a valid node and positive gate capacitance".to_string());
            }
        }
        match &self.observable {
            Some(ObservableSpec::Current { branch }) => {
                if *branch >= self.branches.len() || !self.branches[*branch].element.is_inductive() {
                    problems.push("current observable must reference an inductor branch".to_string());
                }
            }
            Some(ObservableSpec::Charge { mode }) => {
                if *mode >= n {
                    problems.push("charge observable references an unknown mode".to_string());
                }
            }
            None => {}
        }
        if problems.is_empty() {
            match graph::check_tree(self) {
                Ok(tree) => {
                    for &k in self.fluxes.keys() {
                        if tree.contains(&k) {
                            problems.push(format!(
                                "flux assigned to tree branch '{}'; fluxes belong on closure branches",
                                self.branches[k].id
                            ));
                        }
                    }
                }
                Err(e) => problems.push(e.to_string()),
            }
        }
        for expr in self.fluxes.values() {
            for p in expr.params() {
                if !self.params.contains_key(p) {
                    problems.push(format!("unknown parameter '{p}'"));
                }
            }
        }
        for b in &self.branches {
            if let Element::Junction { fx: Some(e), .. } = &b.element {
                for p in e.params() {
                    if !self.params.contains_key(p) {
                        problems.push(format!("unknown parameter '{p}'"));
                    }
                }
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Netlist(problems.join("; ")))
        }
    }

    /// Closure flux (Phi0) on branch k; zero for unlisted closure branches.
    pub fn closure_flux(&self, k: usize) -> Result<f64> {
        match self.fluxes.get(&k) {
            Some(e) => e.eval(&self.params),
            None => Ok(0.0),
        }
    }

    /// Effective Josephson energy of a junction branch (GHz).
    pub fn josephson_energy(&self, k: usize) -> Result<f64> {
        match &self.branches[k].element {
            Element::Junction { ej, fx: None, .. } => Ok(*ej),
            Element::Junction { ej, fx: Some(e), .. } => Ok(ej * (std::f64::consts::PI * e.eval(&self.params)?).cos()),
            _ => Err(Error::Netlist(format!(
                "branch '{}' is not a junction",
                self.branches[k].id
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubCircuit {
    pub spec: CircuitSpec,
    pub role: Role,
    /// Number of low-energy eigenstates kept when projecting.
    pub keep: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MutualCoupling {
    pub id: String,
    /// (circuit index, branch index)
    pub a: (usize, usize),
    pub b: (usize, usize),
    /// pH
    pub m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacitiveCoupling {
    pub id: String,
    /// (circuit index, node index starting at 1)
    pub a: (usize, usize),
    pub b: (usize, usize),
    /// fF
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledSystemSpec {
    pub name: String,
    pub circuits: Vec<SubCircuit>,
    pub mutuals: Vec<MutualCoupling>,
    pub capacitors: Vec<CapacitiveCoupling>,
}

impl CoupledSystemSpec {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        for sc in &self.circuits {
            if let Err(e) = sc.spec.validate() {
                problems.push(format!("circuit '{}': {e}", sc.spec.name));
            }
            if sc.keep < 2 && sc.role == Role::Qubit {
                problems.push(format!("qubit '{}' must keep at least 2 states", sc.spec.name));
            }
            if sc.keep < 1 {
                problems.push(format!("circuit '{}' must keep at least 1 state", sc.spec.name));
            }
            if sc.role == Role::Qubit && sc.spec.observable.is_none() {
                problems.push(format!("qubit '{}' needs an observable", sc.spec.name));
            }
        }
        let nc = self.circuits.len();
        for m in &self.mutuals {
            let mut ls = Vec::new();
            for &(ci, bi) in &[m.a, m.b] {
                match self.circuits.get(ci).and_then(|c| c.spec.branches.get(bi)) {
                    Some(Branch {
                        element: Element::Inductor { l },
                        ..
                    }) => ls.push(*l),
                    _ => problems.push(format!("mutual '{}' must reference inductor branches", m.id)),
                }
            }
            if m.a.0 == m.b.0 && m.a.1 == m.b.1 {
                problems.push(format!("mutual '{}' couples a branch to itself", m.id));
            }
            if ls.len() == 2 && !(m.m.abs() < (ls[0] * ls[1]).sqrt()) {
                problems.push(format!("mutual '{}' violates |M| < sqrt(L1 L2)", m.id));
            }
        }
        for cc in &self.capacitors {
            for &(ci, node) in &[cc.a, cc.b] {
                if ci >= nc || node == 0 || node > self.circuits[ci].spec.num_nodes() {
                    problems.push(format!("coupling capacitor '{}' references an invalid node", cc.id));
                }
            }
            if !(cc.c >= 0.0) {
                problems.push(format!("coupling capacitor '{}' must be non-negative", cc.id));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Netlist(problems.join("; ")))
        }
    }

    pub fn qubits(&self) -> Vec<usize> {
        (0..self.circuits.len())
            .filter(|&i| self.circuits[i].role == Role::Qubit)
            .collect()
    }
}
