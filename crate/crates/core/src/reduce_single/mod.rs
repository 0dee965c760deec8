//! Single-circuit reduction to a two-level Pauli Hamiltonian.

mod instanton;
mod quad;

pub use instanton::{instanton_reduction, InstantonDetails, InstantonParams};
pub use quad::gauss_kronrod;

use crate::linalg::{c, eigh, CMat, LinearOperator, C64, I};
use crate::model::{project, ObservableKind};
use crate::spectra::{lowest_eigenpairs, EigenSolution, SolverOptions, DEGENERACY_TOL};
use crate::{Error, Result};

/// h_I, h_x, h_y, h_z in GHz.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PauliCoefficients1Q {
    pub h_i: f64,
    pub h_x: f64,
    pub h_y: f64,
    pub h_z: f64,
}

impl PauliCoefficients1Q {
    /// h_k = Tr(H sigma_k) / 2
    pub fn from_matrix(h: &CMat) -> Self {
        PauliCoefficients1Q {
            h_i: ((h[(0, 0)] + h[(1, 1)]) * 0.5).re,
            h_x: ((h[(0, 1)] + h[(1, 0)]) * 0.5).re,
            h_y: ((h[(0, 1)] * I - h[(1, 0)] * I) * 0.5).re,
            h_z: ((h[(0, 0)] - h[(1, 1)]) * 0.5).re,
        }
    }

    pub fn matrix(&self) -> CMat {
        CMat::from_row_slice(
            2,
            2,
            &[
                c(self.h_i + self.h_z),
                C64::new(self.h_x, -self.h_y),
                C64::new(self.h_x, self.h_y),
                c(self.h_i - self.h_z),
            ],
        )
    }

    /// Ascending eigenvalues h_I -/+ |h|.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let r = (self.h_x * self.h_x + self.h_y * self.h_y + self.h_z * self.h_z).sqrt();
        [self.h_i - r, self.h_i + r]
    }

    pub fn scale(&self) -> f64 {
        self.h_i.abs().max(self.h_x.abs()).max(self.h_z.abs())
    }
}

/// Computational states in the {|E0>, |E1>} basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ComputationalBasis1Q {
    pub kind: ObservableKind,
    pub u0: [C64; 2],
    pub u1: [C64; 2],
    /// observable eigenvalues of u0 (the larger) and u1
    pub o0: f64,
    pub o1: f64,
    pub theta: f64,
    pub phi1: f64,
    pub phi2: f64,
    /// E0 and E1 are degenerate; u0/u1 then simply diagonalize the observable
    pub degenerate: bool,
}

impl ComputationalBasis1Q {
    /// U = [u0 u1]
    pub fn unitary(&self) -> CMat {
        CMat::from_row_slice(2, 2, &[self.u0[0], self.u1[0], self.u0[1], self.u1[1]])
    }

    /// Build from u0 (any phase), fixing phases so that u00 is real and
    /// the reduced Hamiltonian has h_y = 0 and h_x <= 0.
    fn gauge_fixed(kind: ObservableKind, u0: [C64; 2], o0: f64, o1: f64, degenerate: bool) -> Self {
        let a = u0[0].norm();
        let g = if a > 0.0 { u0[0].conj() / a } else { c(1.0) };
        let beta = u0[1] * g;
        let bn = beta.norm();
        let u0 = [c(a), beta];
        // u1 orthogonal to u0 with the phase giving a real, non-positive <u0|H|u1>
        let u1 = if bn > 0.0 {
            [c(bn), -(beta / bn) * a]
        } else {
            [c(0.0), c(1.0)]
        };
        let theta = 2.0 * bn.atan2(a);
        let phi1 = beta.arg();
        let phi2 = u1[1].arg() - u1[0].arg();
        ComputationalBasis1Q {
            kind,
            u0,
            u1,
            o0,
            o1,
            theta,
            phi1,
            phi2,
            degenerate,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalOptions {
    /// allowed deviation of |o0 - o1| from 2e, as a fraction of 2e
    pub charge_tol: f64,
}

impl Default for LocalOptions {
    fn default() -> Self {
        LocalOptions { charge_tol: 0.01 }
    }
}

/// Local-basis reduction from the two lowest energies and the observable
/// projected onto their span (2x2 in the {|E0>, |E1>} basis).
pub fn local_reduction_projected(
    energies: [f64; 2],
    op_p: &CMat,
    kind: ObservableKind,
    opts: &LocalOptions,
) -> Result<(PauliCoefficients1Q, ComputationalBasis1Q)> {
    let (w, v) = eigh(&((op_p + op_p.adjoint()) * c(0.5)));
    let (o1, o0) = (w[0], w[1]);
    match kind {
        ObservableKind::Flux => {
            if !(o1 < 0.0 && 0.0 < o0) {
                return Err(Error::NoOppositeCurrents { o0, o1 });
            }
        }
        ObservableKind::Charge => {
            if ((o0 - o1) - 1.0).abs() > opts.charge_tol {
                return Err(Error::ChargeDifference { o0, o1 });
            }
        }
    }
    let scale = energies[0].abs().max(energies[1].abs()).max(f64::MIN_POSITIVE);
    let degenerate = (energies[1] - energies[0]).abs() <= DEGENERACY_TOL * scale;
    let basis = ComputationalBasis1Q::gauge_fixed(kind, [v[(0, 1)], v[(1, 1)]], o0, o1, degenerate);
    let u = basis.unitary();
    let d = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(energies[0]), c(energies[1])]));
    let hq = u.adjoint() * d * &u;
    Ok((PauliCoefficients1Q::from_matrix(&hq), basis))
}

/// Solve for the two lowest states of `h` and reduce with observable `o`.
pub fn local_reduction(
    h: &dyn LinearOperator,
    o: &dyn LinearOperator,
    kind: ObservableKind,
    solver: &SolverOptions,
    opts: &LocalOptions,
) -> Result<(PauliCoefficients1Q, ComputationalBasis1Q, EigenSolution)> {
    let eig = lowest_eigenpairs(h, 2, solver)?;
    let v = eig.vectors.columns(0, 2).into_owned();
    let op_p = project(o, &v);
    let (p, b) = local_reduction_projected([eig.values[0], eig.values[1]], &op_p, kind, opts)?;
    Ok((p, b, eig))
}

/// Unperturbed doublet at the expansion point, with |E1> rephased so that
/// I_p = <E0|O|E1> is real and positive.
#[derive(Debug, Clone)]
pub struct PerturbativeBasis {
    pub e0: Vec<C64>,
    pub e1: Vec<C64>,
    pub energies: [f64; 2],
    pub ip: f64,
}

pub fn perturbative_basis(
    h: &dyn LinearOperator,
    o: &dyn LinearOperator,
    solver: &SolverOptions,
) -> Result<PerturbativeBasis> {
    let eig = lowest_eigenpairs(h, 2, solver)?;
    if eig.degenerate[0] {
        return Err(Error::Validity(
            "degenerate unperturbed doublet at the expansion point".into(),
        ));
    }
    let e0 = eig.vector(0);
    let mut e1 = eig.vector(1);
    let mut oe1 = vec![c(0.0); e1.len()];
    o.apply(&e1, &mut oe1);
    let m01 = crate::linalg::dot(&e0, &oe1);
    if m01.norm() == 0.0 {
        return Err(Error::Validity(
            "observable does not connect the unperturbed doublet".into(),
        ));
    }
    let ph = m01.conj() / m01.norm();
    crate::linalg::scale(&mut e1, ph);
    Ok(PerturbativeBasis {
        e0,
        e1,
        energies: [eig.values[0], eig.values[1]],
        ip: m01.norm(),
    })
}

/// Coefficients of `h` in the fixed basis (|E0> +/- |E1>)/sqrt 2.
pub fn perturbative_reduction(basis: &PerturbativeBasis, h: &dyn LinearOperator) -> PauliCoefficients1Q {
    let n = basis.e0.len();
    let v = CMat::from_fn(n, 2, |i, j| if j == 0 { basis.e0[i] } else { basis.e1[i] });
    let h2 = project(h, &v);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let u = CMat::from_row_slice(2, 2, &[c(s), c(s), c(s), c(-s)]);
    PauliCoefficients1Q::from_matrix(&(u.adjoint() * h2 * &u))
}

/// Matrix elements of the projected observable between the eigenstates of
/// the reduced Hamiltonian. `op_p` is in the {|E0>, |E1>} basis.
pub fn reduced_expectations(basis: &ComputationalBasis1Q, op_p: &CMat, hq: &PauliCoefficients1Q) -> Result<CMat> {
    if op_p.shape() != (2, 2) {
        return Err(Error::Numeric(format!(
            "projected operator must be 2x2, got {:?}",
            op_p.shape()
        )));
    }
    let u = basis.unitary();
    let o_comp = u.adjoint() * op_p * &u;
    let (_, mut w) = eigh(&hq.matrix());
    // phases of the reduced eigenstates follow U^dagger |E_j>
    let ud = u.adjoint();
    for j in 0..2 {
        let ov: C64 = (0..2).map(|i| w[(i, j)].conj() * ud[(i, j)]).sum();
        if ov.norm() > 0.0 {
            let ph = ov / ov.norm();
            for i in 0..2 {
                w[(i, j)] *= ph;
            }
        }
    }
    Ok(w.adjoint() * o_comp * w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::parse_netlist;
    use crate::model::CircuitModel;

    fn rf(fz: f64, l_nh: f64) -> CircuitModel {
        let text = format!(
            r#"{{"name":"rf","params":{{"fz":"{fz} Phi0"}},"nodes":[1],
            "branches":[{{"id":"L","nodes":[1,0],"type":"inductor","value":"{l_nh} nH"}},
                        {{"id":"J","nodes":[1,0],"type":"junction","ej":"125 GHz","cap":"5 fF"}}],
            "fluxes":{{"J":"fz"}},"modes":{{"bases":[{{"kind":"ho","nmax":40}}]}},
            "observable":{{"kind":"current","branch":"L"}}}}"#
        );
        CircuitModel::new(&parse_netlist(&text).unwrap().single().unwrap()).unwrap()
    }

    fn lr(m: &CircuitModel) -> Result<(PauliCoefficients1Q, ComputationalBasis1Q, EigenSolution)> {
        let (kind, o) = m.observable().unwrap();
        local_reduction(
            &m.hamiltonian,
            &o,
            kind,
            &SolverOptions::default(),
            &LocalOptions::default(),
        )
    }

    #[test]
    fn pauli_matrix_roundtrip() {
        let p = PauliCoefficients1Q {
            h_i: 0.3,
            h_x: -1.2,
            h_y: 0.4,
            h_z: 2.0,
        };
        let q = PauliCoefficients1Q::from_matrix(&p.matrix());
        for (a, b) in [(q.h_i, p.h_i), (q.h_x, p.h_x), (q.h_y, p.h_y), (q.h_z, p.h_z)] {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn symmetric_point_gives_half_gap() {
        let m = rf(0.5, 2.5);
        let (p, b, eig) = lr(&m).unwrap();
        let gap = eig.values[1] - eig.values[0];
        assert!(p.h_z.abs() < 1e-6 * gap);
        assert!((p.h_x + gap / 2.0).abs() < 1e-10 * gap);
        assert!(b.o1 < 0.0 && b.o0 > 0.0);
    }

    #[test]
    fn spectrum_preserved_and_gauge_real() {
        let m = rf(0.503, 2.5);
        let (p, b, eig) = lr(&m).unwrap();
        let ev = p.eigenvalues();
        for k in 0..2 {
            assert!((ev[k] - eig.values[k]).abs() <= 1e-10 * eig.values[k].abs());
        }
        assert!(p.h_y.abs() < 1e-12 * p.scale());
        assert!(p.h_x < 0.0);
        let u = b.unitary();
        assert!((u.adjoint() * &u - CMat::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn far_bias_is_invalid() {
        let m = rf(0.56, 2.5);
        assert!(matches!(lr(&m), Err(Error::NoOppositeCurrents { .. })));
    }

    #[test]
    fn pr_at_expansion_point_equals_lr() {
        let m = rf(0.5, 2.5);
        let (kind, o) = m.observable().unwrap();
        let (pl, _, _) = local_reduction(
            &m.hamiltonian,
            &o,
            kind,
            &SolverOptions::default(),
            &LocalOptions::default(),
        )
        .unwrap();
        let basis = perturbative_basis(&m.hamiltonian, &o, &SolverOptions::default()).unwrap();
        let pp = perturbative_reduction(&basis, &m.hamiltonian);
        assert!((pl.h_x - pp.h_x).abs() < 1e-9 * pl.h_x.abs());
        assert!((pl.h_i - pp.h_i).abs() < 1e-9 * pl.h_i.abs());
        assert!((pl.h_z - pp.h_z).abs() < 1e-6 * pl.h_x.abs());
    }

    #[test]
    fn lr_expectations_are_exact() {
        let m = rf(0.502, 2.5);
        let (_, o) = m.observable().unwrap();
        let (p, b, eig) = lr(&m).unwrap();
        let v = eig.vectors.columns(0, 2).into_owned();
        let op_p = project(&o, &v);
        let r = reduced_expectations(&b, &op_p, &p).unwrap();
        assert!((r - &op_p).norm() < 1e-9 * op_p.norm());
        let id = reduced_expectations(&b, &CMat::identity(2, 2), &p).unwrap();
        assert!((id - CMat::identity(2, 2)).norm() < 1e-12);
    }
}
