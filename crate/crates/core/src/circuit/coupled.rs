use nalgebra::DMatrix;

use super::matrices::{build_capacitance_matrix, build_inverse_inductance_matrix, invert_capacitance};
use super::symbolic::{Interaction, OperatorKind};
use super::{CircuitSpec, CoupledSystemSpec, Element};
use crate::units::{E_CC, E_LL};
use crate::{Error, Result};

/// Per-circuit loaded matrices in mode coordinates plus cross terms.
#[derive(Debug, Clone, PartialEq)]
pub struct Loading {
    /// 1/fF
    pub inv_cap: Vec<DMatrix<f64>>,
    /// 1/pH
    pub inv_ind: Vec<DMatrix<f64>>,
    pub interactions: Vec<Interaction>,
}

fn mode_labels(spec: &CircuitSpec, prefix: &str) -> Vec<String> {
    if spec.modes.is_some() {
        (1..=spec.num_nodes()).map(|k| format!("{prefix}mode {k}")).collect()
    } else {
        spec.node_labels.iter().map(|l| format!("{prefix}{l}")).collect()
    }
}

/// Unloaded matrices of a single circuit in its mode coordinates.
pub(crate) fn circuit_matrices(spec: &CircuitSpec) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let c = build_capacitance_matrix(spec);
    let li = build_inverse_inductance_matrix(spec);
    match &spec.modes {
        None => Ok((invert_capacitance(&c, &mode_labels(spec, ""))?, li)),
        Some(t) => {
            let cm = t.transpose() * c * t;
            let lm = t.transpose() * li * t;
            Ok((
                invert_capacitance(&cm, &mode_labels(spec, ""))?,
                (&lm + lm.transpose()) * 0.5,
            ))
        }
    }
}

fn components(sys: &CoupledSystemSpec) -> Vec<Vec<usize>> {
    let n = sys.circuits.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        r
    }
    let mut join = |a: usize, b: usize| {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    };
    for m in sys.mutuals.iter().filter(|m| m.m != 0.0) {
        join(m.a.0, m.b.0);
    }
    for c in sys.capacitors.iter().filter(|c| c.c != 0.0) {
        join(c.a.0, c.b.0);
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        match groups.iter_mut().find(|g| g[0] == r) {
            Some(g) => g.push(i),
            None => groups.push(vec![i]),
        }
    }
    groups
}

/// Loaded matrices from the block inverse of the assembled capacitance and
/// branch-inductance matrices. Circuits without couplings are computed
/// exactly as in the single-circuit path.
pub fn apply_coupling_loading(sys: &CoupledSystemSpec) -> Result<Loading> {
    let n = sys.circuits.len();
    let mut inv_cap = vec![DMatrix::zeros(0, 0); n];
    let mut inv_ind = vec![DMatrix::zeros(0, 0); n];
    let mut interactions = Vec::new();
    for group in components(sys) {
        if group.len() == 1 {
            let i = group[0];
            let (ci, li) = circuit_matrices(&sys.circuits[i].spec)?;
            inv_cap[i] = ci;
            inv_ind[i] = li;
            continue;
        }
        let mut offset = vec![usize::MAX; n];
        let mut dim = 0;
        for &i in &group {
            offset[i] = dim;
            dim += sys.circuits[i].spec.num_nodes();
        }
        let mut c = DMatrix::zeros(dim, dim);
        let mut t = DMatrix::zeros(dim, dim);
        let mut labels = Vec::new();
        for &i in &group {
            let spec = &sys.circuits[i].spec;
            let k = spec.num_nodes();
            c.view_mut((offset[i], offset[i]), (k, k))
                .copy_from(&build_capacitance_matrix(spec));
            t.view_mut((offset[i], offset[i]), (k, k))
                .copy_from(&spec.mode_transform());
            labels.extend(mode_labels(spec, &format!("{}.", spec.name)));
        }
        for cc in sys.capacitors.iter().filter(|cc| cc.c != 0.0) {
            let ga = offset[cc.a.0] + cc.a.1 - 1;
            let gb = offset[cc.b.0] + cc.b.1 - 1;
            c[(ga, ga)] += cc.c;
            c[(gb, gb)] += cc.c;
            c[(ga, gb)] -= cc.c;
            c[(gb, ga)] -= cc.c;
        }
        let cm_inv = invert_capacitance(&(t.transpose() * &c * &t), &labels)?;

        // inductive branches of the group, node incidence and branch inductance matrix
        let mut incidence: Vec<(usize, usize, usize)> = Vec::new(); // (row, +node, -node) with usize::MAX for ground
        let mut lvals = Vec::new();
        let mut branch_row = std::collections::BTreeMap::new();
        for &i in &group {
            let spec = &sys.circuits[i].spec;
            let g = |node: usize| if node == 0 { usize::MAX } else { offset[i] + node - 1 };
            for (k, b) in spec.branches.iter().enumerate() {
                if let Element::Inductor { l } = b.element {
                    branch_row.insert((i, k), lvals.len());
                    incidence.push((lvals.len(), g(b.a), g(b.b)));
                    lvals.push(l);
                }
            }
            if let Some(cb) = &spec.current_bias {
                incidence.push((lvals.len(), g(cb.node), usize::MAX));
                lvals.push(cb.l);
            }
        }
        let nb = lvals.len();
        let mut lb = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(lvals));
        for m in sys.mutuals.iter().filter(|m| m.m != 0.0) {
            let (ra, rb) = (branch_row[&m.a], branch_row[&m.b]);
            // sign convention of the branch matrix: off-diagonal -M
            lb[(ra, rb)] -= m.m;
            lb[(rb, ra)] -= m.m;
        }
        let lb_inv = match lb.clone().cholesky() {
            Some(ch) => ch.inverse(),
            None => {
                let sv = lb.singular_values();
                let cond = sv.max() / sv.min();
                return Err(Error::IllConditioned { cond });
            }
        };
        let mut a = DMatrix::zeros(nb, dim);
        for &(r, p, q) in &incidence {
            if p != usize::MAX {
                a[(r, p)] += 1.0;
            }
            if q != usize::MAX {
                a[(r, q)] -= 1.0;
            }
        }
        let tt = a * &t;
        let lm = tt.transpose() * lb_inv * &tt;
        let lm = (&lm + lm.transpose()) * 0.5;

        for &i in &group {
            let k = sys.circuits[i].spec.num_nodes();
            inv_cap[i] = cm_inv.view((offset[i], offset[i]), (k, k)).into_owned();
            inv_ind[i] = lm.view((offset[i], offset[i]), (k, k)).into_owned();
        }
        for (x, &ia) in group.iter().enumerate() {
            for &ib in &group[x + 1..] {
                let (ka, kb) = (sys.circuits[ia].spec.num_nodes(), sys.circuits[ib].spec.num_nodes());
                for ma in 0..ka {
                    for mb in 0..kb {
                        let (ga, gb) = (offset[ia] + ma, offset[ib] + mb);
                        for (kind, coeff) in [
                            (OperatorKind::Charge, 2.0 * E_CC * cm_inv[(ga, gb)]),
                            (OperatorKind::Flux, 2.0 * E_LL * lm[(ga, gb)]),
                        ] {
                            if coeff.abs() > 1e-12 {
                                interactions.push(Interaction {
                                    a: ia,
                                    mode_a: ma,
                                    b: ib,
                                    mode_b: mb,
                                    kind,
                                    coeff,
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    interactions.sort_by_key(|x| (x.a, x.b, x.mode_a, x.mode_b, x.kind as u8));
    Ok(Loading {
        inv_cap,
        inv_ind,
        interactions,
    })
}
