use std::sync::Arc;

use super::basis::{ModeBasis, Which};
use super::kron::{Factor, KronSum};
use crate::circuit::{BasisSpec, SymbolicHamiltonian};
use crate::linalg::{c, C64};
use crate::units::{E_CC, E_LL};
use crate::{Error, Result};

/// Coefficients below this (GHz) are treated as structural zeros.
const COEFF_TOL: f64 = 1e-12;

/// Bases for every mode; oscillator widths follow each mode's quadratic part.
pub fn mode_bases(sym: &SymbolicHamiltonian, specs: &[BasisSpec]) -> Result<Vec<ModeBasis>> {
    if specs.len() != sym.num_modes() {
        return Err(Error::Netlist(format!(
            "{} bases given for {} modes",
            specs.len(),
            sym.num_modes()
        )));
    }
    specs
        .iter()
        .enumerate()
        .map(|(j, s)| ModeBasis::from_spec(s, sym.inv_cap[(j, j)], sym.inv_ind[(j, j)], j))
        .collect()
}

/// Hamiltonian of one circuit as a lazy tensor-product sum.
pub fn assemble_hamiltonian(sym: &SymbolicHamiltonian, bases: &[ModeBasis]) -> Result<KronSum> {
    let n = sym.num_modes();
    if bases.len() != n {
        return Err(Error::Netlist(format!("{} bases given for {} modes", bases.len(), n)));
    }
    let dims: Vec<usize> = bases.iter().map(|b| b.dim()).collect();
    let mut h = KronSum::new(dims);
    let op = |j: usize, w: Which| -> Result<Arc<Factor>> { Ok(Arc::new(Factor::new(&bases[j].operator(w)?))) };
    for j in 0..n {
        let kc = E_CC * sym.inv_cap[(j, j)];
        if kc.abs() > COEFF_TOL {
            h.push(c(kc), vec![(j, op(j, Which::ChargeSquared)?)]);
        }
        let kl = E_LL * sym.inv_ind[(j, j)];
        if kl.abs() > COEFF_TOL {
            h.push(c(kl), vec![(j, op(j, Which::FluxSquared)?)]);
        }
        if sym.linear_charge[j].abs() > COEFF_TOL {
            h.push(c(sym.linear_charge[j]), vec![(j, op(j, Which::Charge)?)]);
        }
        if sym.linear_flux[j].abs() > COEFF_TOL {
            h.push(c(sym.linear_flux[j]), vec![(j, op(j, Which::Flux)?)]);
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let kc = 2.0 * E_CC * sym.inv_cap[(i, j)];
            if kc.abs() > COEFF_TOL {
                h.push(c(kc), vec![(i, op(i, Which::Charge)?), (j, op(j, Which::Charge)?)]);
            }
            let kl = 2.0 * E_LL * sym.inv_ind[(i, j)];
            if kl.abs() > COEFF_TOL {
                h.push(c(kl), vec![(i, op(i, Which::Flux)?), (j, op(j, Which::Flux)?)]);
            }
        }
    }
    h.constant += sym.constant;
    for cos in &sym.cosines {
        // ej (1 - cos): split the cosine into exp(i x)/2 and its adjoint
        h.constant += cos.ej;
        let phase = C64::from_polar(1.0, 2.0 * std::f64::consts::PI * cos.offset);
        let mut fwd = Vec::new();
        for (j, &k) in cos.coeffs.iter().enumerate() {
            if k != 0.0 {
                fwd.push((j, op(j, Which::Exp(k))?));
            }
        }
        if fwd.is_empty() {
            h.constant -= cos.ej * phase.re;
            continue;
        }
        let back = fwd.iter().map(|(j, f)| (*j, Arc::new(f.adjoint()))).collect();
        h.push(phase * (-0.5 * cos.ej), fwd);
        h.push(phase.conj() * (-0.5 * cos.ej), back);
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{assemble_symbolic_hamiltonian, parse_netlist};
    use crate::linalg::{eigh, LinearOperator};

    const RF: &str = r#"{"name":"rf","params":{"fz":"0.5 Phi0"},"nodes":[1],
        "branches":[{"id":"L","nodes":[1,0],"type":"inductor","value":"2.5 nH"},
                    {"id":"J","nodes":[1,0],"type":"junction","ej":"125 GHz","cap":"5 fF"}],
        "fluxes":{"J":"fz"},"modes":{"bases":[{"kind":"ho","nmax":40}]}}"#;

    #[test]
    fn rf_squid_shape_and_hermiticity() {
        let spec = parse_netlist(RF).unwrap().single().unwrap();
        let sym = assemble_symbolic_hamiltonian(&spec).unwrap();
        let bases = mode_bases(&sym, &spec.bases).unwrap();
        let h = assemble_hamiltonian(&sym, &bases).unwrap().to_csr();
        assert_eq!(h.dim, 41);
        assert!(h.max_anti_hermitian() < 1e-12);
    }

    #[test]
    fn quadratic_two_mode_normal_modes() {
        // two LC oscillators coupled by a capacitor: compare with the classical normal modes
        let text = r#"{"name":"lc2","nodes":[1,2],
            "branches":[{"id":"L1","nodes":[1,0],"type":"inductor","value":"1 nH"},
                        {"id":"C1","nodes":[1,0],"type":"capacitor","value":"50 fF"},
                        {"id":"L2","nodes":[2,0],"type":"inductor","value":"1.3 nH"},
                        {"id":"C2","nodes":[2,0],"type":"capacitor","value":"40 fF"},
                        {"id":"Cc","nodes":[1,2],"type":"capacitor","value":"5 fF"}],
            "modes":{"bases":[{"kind":"ho","nmax":14},{"kind":"ho","nmax":14}]}}"#;
        let spec = parse_netlist(text).unwrap().single().unwrap();
        let sym = assemble_symbolic_hamiltonian(&spec).unwrap();
        let bases = mode_bases(&sym, &spec.bases).unwrap();
        let h = assemble_hamiltonian(&sym, &bases).unwrap();
        let (w, _) = eigh(&h.to_dense());
        // classical: omega^2 are eigenvalues of C^-1 L^-1 (SI), f = omega / 2 pi in GHz
        let cinv = &sym.inv_cap * 1e15;
        let linv = &sym.inv_ind * 1e12;
        let m = &cinv * &linv;
        let ev = m.complex_eigenvalues();
        let mut f: Vec<f64> = ev
            .iter()
            .map(|z| z.re.sqrt() / (2.0 * std::f64::consts::PI) / 1e9)
            .collect();
        f.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let e1 = w[1] - w[0];
        assert!((e1 - f[0]).abs() / f[0] < 1e-6, "{e1} {}", f[0]);
        assert!(w[2..5].iter().any(|x| (x - w[0] - f[1]).abs() / f[1] < 1e-6));
        assert!((w[0] - 0.5 * (f[0] + f[1])).abs() / w[0] < 1e-6);
    }
}
