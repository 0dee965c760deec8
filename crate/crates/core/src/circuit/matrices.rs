use nalgebra::DMatrix;

use super::{CircuitSpec, Element};
use crate::{Error, Result};

fn stamp(m: &mut DMatrix<f64>, a: usize, b: usize, v: f64) {
    if a > 0 {
        m[(a - 1, a - 1)] += v;
    }
    if b > 0 {
        m[(b - 1, b - 1)] += v;
    }
    if a > 0 && b > 0 {
        m[(a - 1, b - 1)] -= v;
        m[(b - 1, a - 1)] -= v;
    }
}

/// Node capacitance matrix (fF). Junction capacitances and a voltage-bias
/// gate capacitance are included.
pub fn build_capacitance_matrix(spec: &CircuitSpec) -> DMatrix<f64> {
    let n = spec.num_nodes();
    let mut m = DMatrix::zeros(n, n);
    for b in &spec.branches {
        let c = b.element.capacitance();
        if c != 0.0 {
            stamp(&mut m, b.a, b.b, c);
        }
    }
    if let Some(vb) = &spec.voltage_bias {
        stamp(&mut m, vb.node, 0, vb.cg);
    }
    m
}

/// Node inverse-inductance matrix (1/pH), including a current-bias inductor.
pub fn build_inverse_inductance_matrix(spec: &CircuitSpec) -> DMatrix<f64> {
    let n = spec.num_nodes();
    let mut m = DMatrix::zeros(n, n);
    for b in &spec.branches {
        if let Element::Inductor { l } = b.element {
            stamp(&mut m, b.a, b.b, 1.0 / l);
        }
    }
    if let Some(cb) = &spec.current_bias {
        stamp(&mut m, cb.node, 0, 1.0 / cb.l);
    }
    m
}

/// Inverse of a capacitance matrix. `labels[k]` names row k in errors.
pub fn invert_capacitance(c: &DMatrix<f64>, labels: &[String]) -> Result<DMatrix<f64>> {
    for k in 0..c.nrows() {
        if c[(k, k)] == 0.0 {
            return Err(Error::Singular {
                what: "capacitance",
                node: Some(labels[k].clone()),
            });
        }
    }
    let chol = c.clone().cholesky().ok_or_else(|| {
        // find the first node whose leading block loses definiteness
        let mut bad = labels.last().cloned().unwrap_or_default();
        for k in 1..=c.nrows() {
            if c.view((0, 0), (k, k)).into_owned().cholesky().is_none() {
                bad = labels[k - 1].clone();
                break;
            }
        }
        Error::Singular {
            what: "capacitance",
            node: Some(bad),
        }
    })?;
    let inv = chol.inverse();
    let cond = c.norm() * inv.norm();
    if !cond.is_finite() || cond > 1e13 {
        return Err(Error::IllConditioned { cond });
    }
    Ok((&inv + inv.transpose()) * 0.5)
}

#[cfg(test)]
mod tests {
    use super::super::{Branch, CircuitSpec, Element};
    use super::*;
    use std::collections::BTreeMap;

    pub(crate) fn bare(nodes: usize, branches: Vec<(usize, usize, Element)>) -> CircuitSpec {
        CircuitSpec {
            name: "t".into(),
            node_labels: (1..=nodes as i64).collect(),
            branches: branches
                .into_iter()
                .enumerate()
                .map(|(k, (a, b, element))| Branch {
                    id: format!("b{k}"),
                    a,
                    b,
                    element,
                })
                .collect(),
            tree: None,
            fluxes: BTreeMap::new(),
            params: BTreeMap::new(),
            current_bias: None,
            voltage_bias: None,
            modes: None,
            bases: vec![],
            observable: None,
        }
    }

    #[test]
    fn two_node_capacitance() {
        let s = bare(
            2,
            vec![
                (1, 0, Element::Capacitor { c: 3.0 }),
                (2, 0, Element::Capacitor { c: 5.0 }),
                (1, 2, Element::Capacitor { c: 7.0 }),
            ],
        );
        let c = build_capacitance_matrix(&s);
        assert_eq!(c, DMatrix::from_row_slice(2, 2, &[10.0, -7.0, -7.0, 12.0]));
        assert_eq!(build_inverse_inductance_matrix(&s), DMatrix::zeros(2, 2));
    }

    #[test]
    fn floating_node_is_singular() {
        let s = bare(
            2,
            vec![
                (1, 0, Element::Capacitor { c: 3.0 }),
                (2, 0, Element::Inductor { l: 5.0 }),
            ],
        );
        let c = build_capacitance_matrix(&s);
        let err = invert_capacitance(&c, &["1".into(), "2".into()]).unwrap_err();
        assert!(err.to_string().contains('2'));
    }

    #[test]
    fn rf_squid_inverse_inductance() {
        let s = bare(1, vec![(1, 0, Element::Inductor { l: 2500.0 })]);
        assert_eq!(build_inverse_inductance_matrix(&s)[(0, 0)], 1.0 / 2500.0);
    }
}
