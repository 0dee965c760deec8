use nalgebra::{DMatrix, DVector};

use super::coupled::{apply_coupling_loading, circuit_matrices};
use super::graph::branch_flux_map;
use super::{CircuitSpec, CoupledSystemSpec};
use crate::units::{E_CHARGE, PHI0, PLANCK};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum OperatorKind {
    /// Mode charge (units of 2e).
    Charge = 0,
    /// Mode flux (units of Phi0).
    Flux = 1,
}

/// coeff * O_a(mode_a) * O_b(mode_b), coefficient in GHz.
#[derive(Debug, Clone, PartialEq)]
pub struct Interaction {
    pub a: usize,
    pub mode_a: usize,
    pub b: usize,
    pub mode_b: usize,
    pub kind: OperatorKind,
    pub coeff: f64,
}

/// ej * (1 - cos(2 pi (coeffs . phi + offset))).
#[derive(Debug, Clone, PartialEq)]
pub struct CosineTerm {
    pub branch: String,
    pub coeffs: Vec<f64>,
    pub ej: f64,
    pub offset: f64,
}

/// H = E_CC n^T inv_cap n + E_LL phi^T inv_ind phi + sum of cosines
///   + linear_charge . n + linear_flux . phi + constant, in mode coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolicHamiltonian {
    pub inv_cap: DMatrix<f64>,
    pub inv_ind: DMatrix<f64>,
    pub cosines: Vec<CosineTerm>,
    pub linear_charge: Vec<f64>,
    pub linear_flux: Vec<f64>,
    pub constant: f64,
}

impl SymbolicHamiltonian {
    pub fn num_modes(&self) -> usize {
        self.inv_cap.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledSymbolic {
    pub circuits: Vec<SymbolicHamiltonian>,
    pub interactions: Vec<Interaction>,
}

pub fn assemble_symbolic_hamiltonian(spec: &CircuitSpec) -> Result<SymbolicHamiltonian> {
    spec.validate()?;
    let (ic, il) = circuit_matrices(spec)?;
    symbolic_with(spec, ic, il)
}

pub fn assemble_coupled_symbolic(sys: &CoupledSystemSpec) -> Result<CoupledSymbolic> {
    sys.validate()?;
    let ld = apply_coupling_loading(sys)?;
    let circuits = sys
        .circuits
        .iter()
        .zip(ld.inv_cap)
        .zip(ld.inv_ind)
        .map(|((sc, ic), il)| symbolic_with(&sc.spec, ic, il))
        .collect::<Result<Vec<_>>>()?;
    Ok(CoupledSymbolic {
        circuits,
        interactions: ld.interactions,
    })
}

/// Term list for one circuit given its (possibly loaded) mode matrices.
pub(crate) fn symbolic_with(
    spec: &CircuitSpec,
    inv_cap: DMatrix<f64>,
    inv_ind: DMatrix<f64>,
) -> Result<SymbolicHamiltonian> {
    let n = spec.num_nodes();
    let t = spec.mode_transform();
    let fmap = branch_flux_map(spec)?;
    let mut cosines = Vec::new();
    for (k, b) in spec.branches.iter().enumerate() {
        if !b.element.is_junction() {
            continue;
        }
        let ej = spec.josephson_energy(k)?;
        if ej == 0.0 {
            continue;
        }
        let node = DVector::from_vec(fmap[k].coeffs.clone());
        let coeffs: Vec<f64> = (t.transpose() * node).iter().cloned().collect();
        cosines.push(CosineTerm {
            branch: b.id.clone(),
            coeffs,
            ej,
            offset: fmap[k].offset,
        });
    }
    let ghz = PLANCK * 1e9;
    let mut linear_charge = vec![0.0; n];
    let mut linear_flux = vec![0.0; n];
    let mut constant = 0.0;
    if let Some(cb) = &spec.current_bias {
        // (Phi_a - L_a I)^2 / 2 L_a: the quadratic part sits in inv_ind
        let k = -cb.current * PHI0 / ghz;
        for j in 0..n {
            linear_flux[j] += k * t[(cb.node - 1, j)];
        }
        constant += cb.l * 1e-12 * cb.current * cb.current / 2.0 / ghz;
    }
    if let Some(vb) = &spec.voltage_bias {
        let a = vb.node - 1;
        // w = C_mode^-1 T^T e_a, so that e_a^T C_node^-1 Q_node = w . Q_mode
        let w: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| inv_cap[(i, j)] * t[(a, j)]).sum())
            .collect();
        let cg_vg = vb.cg * vb.vg; // fF * V
        for i in 0..n {
            linear_charge[i] += cg_vg * w[i] * 2.0 * E_CHARGE / ghz;
        }
        let caa: f64 = (0..n).map(|j| t[(a, j)] * w[j]).sum(); // 1/fF
        constant += 0.5 * cg_vg * cg_vg * caa * 1e-15 / ghz - 0.5 * vb.cg * 1e-15 * vb.vg * vb.vg / ghz;
    }
    Ok(SymbolicHamiltonian {
        inv_cap,
        inv_ind,
        cosines,
        linear_charge,
        linear_flux,
        constant,
    })
}

#[cfg(test)]
mod tests {
    use super::super::netlist::parse_netlist;
    use super::*;

    const RF: &str = r#"{"name":"rf","params":{"fz":"0.5 Phi0"},"nodes":[1],
        "branches":[{"id":"L","nodes":[1,0],"type":"inductor","value":"2.5 nH"},
                    {"id":"J","nodes":[1,0],"type":"junction","ej":"125 GHz","cap":"5 fF"}],
        "fluxes":{"J":"fz"},"modes":{"bases":[{"kind":"ho","nmax":40}]}}"#;

    #[test]
    fn rf_squid_terms() {
        let spec = parse_netlist(RF).unwrap().single().unwrap();
        let s = assemble_symbolic_hamiltonian(&spec).unwrap();
        assert!((s.inv_cap[(0, 0)] - 0.2).abs() < 1e-15);
        assert!((s.inv_ind[(0, 0)] - 1.0 / 2500.0).abs() < 1e-18);
        assert_eq!(s.cosines.len(), 1);
        assert_eq!(s.cosines[0].coeffs, vec![1.0]);
        assert_eq!(s.cosines[0].offset, 0.5);
        assert_eq!(s.cosines[0].ej, 125.0);
        assert_eq!(s.constant, 0.0);
    }

    #[test]
    fn voltage_bias_adds_linear_charge() {
        let text = r#"{"name":"cpb","nodes":[1],
            "branches":[{"id":"J","nodes":[1,0],"type":"junction","ej":"10 GHz","cap":"2 fF"}],
            "biases":{"voltage":{"node":1,"cg":"0.5 fF","vg":"10 uV"}},
            "modes":{"bases":[{"kind":"charge","cutoff":5}]}}"#;
        let spec = parse_netlist(text).unwrap().single().unwrap();
        let s = assemble_symbolic_hamiltonian(&spec).unwrap();
        assert!((s.inv_cap[(0, 0)] - 1.0 / 2.5).abs() < 1e-15);
        let expect = 0.5 * 1e-5 / 2.5 * 2.0 * E_CHARGE / (PLANCK * 1e9);
        assert!((s.linear_charge[0] - expect).abs() < 1e-12 * expect.abs());
        assert!(s.constant < 0.0);
    }

    #[test]
    fn current_bias_terms() {
        let text = r#"{"name":"cb","nodes":[1],
            "branches":[{"id":"C","nodes":[1,0],"type":"capacitor","value":"10 fF"}],
            "biases":{"current":{"node":1,"inductance":"1 nH","current":"1 uA"}},
            "modes":{"bases":[{"kind":"ho","nmax":10}]}}"#;
        let spec = parse_netlist(text).unwrap().single().unwrap();
        let s = assemble_symbolic_hamiltonian(&spec).unwrap();
        assert!((s.inv_ind[(0, 0)] - 1e-3).abs() < 1e-18);
        assert!(s.linear_flux[0] < 0.0);
        assert!(s.constant > 0.0);
        assert!(s.cosines.is_empty());
    }
}
