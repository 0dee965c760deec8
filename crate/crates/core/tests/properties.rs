use proptest::prelude::*;

use screduce::circuit::{load_netlist, parse_netlist, Netlist};
use screduce::linalg::{c, eigh, CMat, LinearOperator, C64};
use screduce::model::{CircuitModel, CoupledModel};
use screduce::reduce_multi::{
    align_signs, diagonal_coefficients, gauge_fix, pauli_decompose, pauli_reconstruct, remove_mixed_two_local,
    schrieffer_wolff_reduction, PauliHamiltonian, QubitRegister, DEFAULT_DIM_CAP,
};
use screduce::reduce_single::{local_reduction, LocalOptions};
use screduce::spectra::{lowest_eigenpairs, SolverOptions};

fn netlist(name: &str) -> Netlist {
    load_netlist(format!("{}/../../netlists/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn rf_squid(l_ph: f64, ej: f64, cap: f64, fz: f64) -> Netlist {
    parse_netlist(&format!(
        r#"{{
  "name": "rf", "params": {{"fz": "{fz} Phi0"}}, "nodes": [1],
  "branches": [
    {{"id": "L", "nodes": [1, 0], "type": "inductor", "value": "{l_ph} pH"}},
    {{"id": "J", "nodes": [1, 0], "type": "junction", "ej": "{ej} GHz", "cap": "{cap} fF"}}
  ],
  "tree": ["L"], "fluxes": {{"J": "fz"}},
  "modes": {{"bases": [{{"kind": "ho", "nmax": 30}}]}},
  "observable": {{"kind": "current", "branch": "L"}}
}}"#
    ))
    .unwrap()
}

fn series_loop(l_ph: f64, fz: f64, closure: &str) -> Netlist {
    let other = if closure == "J1" { "J2" } else { "J1" };
    parse_netlist(&format!(
        r#"{{
  "name": "series_loop", "params": {{"fz": "{fz} Phi0"}}, "nodes": [1, 2],
  "branches": [
    {{"id": "L", "nodes": [1, 0], "type": "inductor", "value": "{l_ph} pH"}},
    {{"id": "J1", "nodes": [1, 2], "type": "junction", "ej": "120 GHz", "cap": "5 fF"}},
    {{"id": "J2", "nodes": [2, 0], "type": "junction", "ej": "90 GHz", "cap": "4 fF"}}
  ],
  "tree": ["L", "{other}"], "fluxes": {{"{closure}": "fz"}},
  "modes": {{"bases": [{{"kind": "ho", "nmax": 20}}, {{"kind": "charge", "cutoff": 10}}]}}
}}"#
    ))
    .unwrap()
}

fn spectrum(p: &PauliHamiltonian) -> Vec<f64> {
    eigh(&pauli_reconstruct(p)).0
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn hermitian(n: usize, re: &[f64], im: &[f64]) -> CMat {
    let a = CMat::from_fn(n, n, |i, j| C64::new(re[i * n + j], im[i * n + j]));
    (&a + a.adjoint()) * c(0.5)
}

fn two_qubit_coeffs() -> impl Strategy<Value = PauliHamiltonian> {
    prop::collection::vec(-1.0f64..1.0, 16).prop_map(|v| PauliHamiltonian { n: 2, coeffs: v })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pauli_round_trip(n in 1usize..=3, re in prop::collection::vec(-5.0f64..5.0, 64), im in prop::collection::vec(-5.0f64..5.0, 64)) {
        let d = 1 << n;
        let h = hermitian(d, &re, &im);
        let back = pauli_reconstruct(&pauli_decompose(&h).unwrap());
        let err = (back - &h).iter().map(|x| x.norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn gauge_fix_keeps_spectrum(p in two_qubit_coeffs()) {
        let g = gauge_fix(&p);
        prop_assert!(max_diff(&spectrum(&p), &spectrum(&g)) < 1e-12);
        for l in ["yI", "Iy"] {
            prop_assert!(g.get(l).abs() < 1e-12);
        }
        prop_assert!(g.get("xI") <= 1e-12 && g.get("Ix") <= 1e-12);
    }

    #[test]
    fn align_signs_keeps_spectrum(p in two_qubit_coeffs(), q in two_qubit_coeffs()) {
        let a = align_signs(&p, &q);
        prop_assert!(max_diff(&spectrum(&q), &spectrum(&a)) < 1e-12);
    }

    #[test]
    fn mixed_removal_keeps_spectrum(
        base in prop::collection::vec(-1.0f64..1.0, 7),
        xz in -0.1f64..0.1,
        zx in -0.1f64..0.1,
    ) {
        let mut p = PauliHamiltonian::zeros(2);
        for (l, v) in ["zI", "Iz", "xI", "Ix", "xx", "yy", "zz"].iter().zip(&base) {
            p.set(l, *v).unwrap();
        }
        // keep the single-qubit x fields away from zero so the rotation is well posed
        p.set("xI", p.get("xI").signum() * (0.3 + p.get("xI").abs())).unwrap();
        p.set("Ix", p.get("Ix").signum() * (0.3 + p.get("Ix").abs())).unwrap();
        p.set("xz", xz).unwrap();
        p.set("zx", zx).unwrap();
        if let Ok((r, _)) = remove_mixed_two_local(&p) {
            prop_assert!(r.get("xz").abs() < 1e-10 && r.get("zx").abs() < 1e-10);
            prop_assert!(max_diff(&spectrum(&p), &spectrum(&r)) < 1e-12);
        }
    }

    #[test]
    fn diagonal_round_trip(h in prop::collection::vec(-2.0f64..2.0, 8)) {
        // three-qubit z/I Hamiltonian -> energies by computational label -> coefficients
        let mut p = PauliHamiltonian::zeros(3);
        for (mask, v) in h.iter().enumerate() {
            let digits: Vec<usize> = (0..3).map(|q| if (mask >> (2 - q)) & 1 == 1 { 3 } else { 0 }).collect();
            let i = p.index(&digits);
            p.coeffs[i] = *v;
        }
        let hq = pauli_reconstruct(&p);
        let labelled: Vec<(usize, f64)> = (0..8).map(|a| (a, hq[(a, a)].re)).collect();
        let back = diagonal_coefficients(3, &labelled);
        prop_assert!(max_diff(&back.coeffs, &p.coeffs) < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn assembled_hamiltonian_is_hermitian(l in 1500.0f64..5000.0, ej in 50.0f64..200.0, cap in 2.0f64..20.0, fz in 0.0f64..1.0) {
        let m = CircuitModel::new(&rf_squid(l, ej, cap, fz).single().unwrap()).unwrap();
        let h = m.hamiltonian.to_dense();
        let scale = h.iter().map(|x| x.norm()).fold(0.0, f64::max);
        let defect = (&h - h.adjoint()).iter().map(|x| x.norm()).fold(0.0, f64::max);
        prop_assert!(defect <= 1e-12 * scale, "{defect}");
    }

    #[test]
    fn spectrum_independent_of_spanning_tree(l in 200.0f64..800.0, fz in 0.0f64..1.0) {
        let opts = SolverOptions::default();
        let a = CircuitModel::new(&series_loop(l, fz, "J1").single().unwrap()).unwrap().solve(4, &opts).unwrap();
        let b = CircuitModel::new(&series_loop(l, fz, "J2").single().unwrap()).unwrap().solve(4, &opts).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            prop_assert!((x - y).abs() <= 1e-9 * x.abs(), "{x} {y}");
        }
    }

    #[test]
    fn local_reduction_reproduces_doublet(fz in 0.47f64..0.53) {
        let m = CircuitModel::new(&rf_squid(2500.0, 125.0, 5.0, fz).single().unwrap()).unwrap();
        let (kind, o) = m.observable().unwrap();
        let (p, _, eig) = local_reduction(&m.hamiltonian, &o, kind, &SolverOptions::default(), &LocalOptions::default()).unwrap();
        let ev = p.eigenvalues();
        prop_assert!((ev[0] - eig.values[0]).abs() <= 1e-10 * eig.values[1].abs());
        prop_assert!((ev[1] - eig.values[1]).abs() <= 1e-10 * eig.values[1].abs());
        prop_assert!(p.h_y.abs() <= 1e-12 * p.scale());
    }
}

fn two_qubit(
    m12: f64,
    c12: f64,
) -> (
    screduce::operators::KronSum,
    QubitRegister,
    screduce::spectra::EigenSolution,
) {
    let mut net = netlist("two_qubit.json");
    net.set("coupling:M12", m12).unwrap();
    net.set("coupling:C12", c12).unwrap();
    let opts = SolverOptions::default();
    let cm = CoupledModel::new(&net.coupled().unwrap()).unwrap();
    let solved = cm.solve_circuits(&opts).unwrap();
    let reg = QubitRegister::new(&solved, &LocalOptions::default(), DEFAULT_DIM_CAP).unwrap();
    let h = cm.composite(&solved).unwrap();
    let eig = lowest_eigenpairs(&h, 4, &opts).unwrap();
    (h, reg, eig)
}

#[test]
fn zero_coupling_gives_tensor_sum_of_single_reductions() {
    let (h, reg, eig) = two_qubit(0.0, 0.0);
    let r = schrieffer_wolff_reduction(&h, &reg, &eig).unwrap();
    let p = &r.hamiltonian;
    let scale = p.scale();
    for i in 1..p.coeffs.len() {
        let expect = match p.label(i).as_str() {
            "xI" => reg.single[0].h_x,
            "zI" => reg.single[0].h_z,
            "Ix" => reg.single[1].h_x,
            "Iz" => reg.single[1].h_z,
            _ => 0.0,
        };
        assert!(
            (p.coeffs[i] - expect).abs() <= 1e-9 * scale,
            "{} {} {}",
            p.label(i),
            p.coeffs[i],
            expect
        );
    }
    assert!(r.diagnostics.projector_distance < 1e-8);
}

#[test]
fn swt_rotation_is_unitary_across_the_coupling_sweep() {
    for m12 in [-2.0, -0.5, 1.0, 2.0] {
        let (h, reg, eig) = two_qubit(m12, 132.0);
        let r = schrieffer_wolff_reduction(&h, &reg, &eig).unwrap();
        assert!(r.diagnostics.unitarity.unwrap() < 1e-10);
        assert!(r.diagnostics.conjugation.unwrap() < 1e-10);
        assert!(r.spectrum_error() < 1e-10);
    }
}

#[test]
fn register_paulis_obey_the_algebra_on_the_subspace() {
    let (_, reg, _) = two_qubit(2.0, 132.0);
    let n = reg.dim();
    let p0 = reg.p0();
    let apply = |op: &dyn LinearOperator, x: &[C64]| {
        let mut y = vec![c(0.0); n];
        op.apply(x, &mut y);
        y
    };
    // random vector inside the computational subspace
    let mut x = vec![c(0.0); n];
    for (k, &i) in reg.subspace.iter().enumerate() {
        x[i] = C64::new(0.3 + k as f64, -0.2 * k as f64);
    }
    assert!(apply(&p0, &x).iter().zip(&x).all(|(a, b)| (a - b).norm() < 1e-14));
    for q in 0..2 {
        let sx = reg.pauli_operator(q, 'x').unwrap();
        let sy = reg.pauli_operator(q, 'y').unwrap();
        let sz = reg.pauli_operator(q, 'z').unwrap();
        for s in [&sx, &sy, &sz] {
            let y = apply(s, &apply(s, &x));
            assert!(y.iter().zip(&x).all(|(a, b)| (a - b).norm() < 1e-12));
        }
        // sigma_x sigma_y = i sigma_z
        let xy = apply(&sx, &apply(&sy, &x));
        let iz: Vec<C64> = apply(&sz, &x).iter().map(|v| v * C64::new(0.0, 1.0)).collect();
        assert!(xy.iter().zip(&iz).all(|(a, b)| (a - b).norm() < 1e-12));
    }
}
