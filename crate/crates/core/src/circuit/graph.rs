use super::{CircuitSpec, Element};
use crate::{Error, Result};

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut x = x;
        while self.0[x] != r {
            let next = self.0[x];
            self.0[x] = r;
            x = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[ra.max(rb)] = ra.min(rb);
        true
    }
}

fn rank(e: &Element) -> u8 {
    match e {
        Element::Inductor { .. } => 0,
        Element::Junction { .. } => 1,
        Element::Capacitor { .. } => 2,
    }
}

/// Spanning tree chosen greedily: inductors first, then junctions, then
/// capacitors, each group in netlist order.
pub fn auto_spanning_tree(spec: &CircuitSpec) -> Result<Vec<usize>> {
    let n = spec.num_nodes();
    let mut order: Vec<usize> = (0..spec.branches.len()).collect();
    order.sort_by_key(|&k| (rank(&spec.branches[k].element), k));
    let mut uf = UnionFind::new(n + 1);
    let mut tree = Vec::new();
    for k in order {
        let b = &spec.branches[k];
        if b.a <= n && b.b <= n && uf.union(b.a, b.b) {
            tree.push(k);
        }
    }
    tree.sort_unstable();
    check_tree_set(spec, &tree)?;
    Ok(tree)
}

pub(super) fn check_tree(spec: &CircuitSpec) -> Result<Vec<usize>> {
    let tree = spec.spanning_tree()?;
    check_tree_set(spec, &tree)?;
    Ok(tree)
}

fn check_tree_set(spec: &CircuitSpec, tree: &[usize]) -> Result<()> {
    let n = spec.num_nodes();
    if tree.len() != n {
        return Err(Error::Netlist(format!(
            "spanning tree has {} branches but the circuit has {} non-ground nodes",
            tree.len(),
            n
        )));
    }
    let mut uf = UnionFind::new(n + 1);
    for &k in tree {
        let b = spec
            .branches
            .get(k)
            .ok_or_else(|| Error::Netlist(format!("spanning tree references unknown branch {k}")))?;
        if !uf.union(b.a, b.b) {
            return Err(Error::Netlist(format!(
                "spanning tree contains a loop through branch '{}'",
                b.id
            )));
        }
    }
    for node in 1..=n {
        if uf.find(node) != uf.find(0) {
            return Err(Error::Netlist(format!(
                "node {} is not reached by the spanning tree",
                spec.node_labels[node - 1]
            )));
        }
    }
    for (k, b) in spec.branches.iter().enumerate() {
        if b.element.is_inductive() && !tree.contains(&k) {
            return Err(Error::Netlist(format!(
                "inductive branch '{}' lies in the closure set",
                b.id
            )));
        }
    }
    Ok(())
}

/// Branch flux as a combination of node fluxes plus an external offset (Phi0).
#[derive(Debug, Clone, PartialEq)]
pub struct BranchFlux {
    pub coeffs: Vec<f64>,
    pub offset: f64,
    pub closure: bool,
}

/// Tree branches map to Phi_a - Phi_b; closure branches add their loop flux.
pub fn branch_flux_map(spec: &CircuitSpec) -> Result<Vec<BranchFlux>> {
    let tree = check_tree(spec)?;
    let n = spec.num_nodes();
    spec.branches
        .iter()
        .enumerate()
        .map(|(k, b)| {
            let mut coeffs = vec![0.0; n];
            if b.a > 0 {
                coeffs[b.a - 1] += 1.0;
            }
            if b.b > 0 {
                coeffs[b.b - 1] -= 1.0;
            }
            let closure = !tree.contains(&k);
            let offset = if closure { spec.closure_flux(k)? } else { 0.0 };
            Ok(BranchFlux {
                coeffs,
                offset,
                closure,
            })
        })
        .collect()
}
