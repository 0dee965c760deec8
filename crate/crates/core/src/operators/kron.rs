use std::sync::Arc;

use super::sparse::{OperatorMatrix, DROP_TOL};
use crate::linalg::{c, CMat, LinearOperator, C64};

/// Nonzero entries of a small single-mode matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    pub dim: usize,
    pub entries: Vec<(usize, usize, C64)>,
}

impl Factor {
    pub fn new(m: &CMat) -> Self {
        let mut entries = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)].norm() > DROP_TOL {
                    entries.push((i, j, m[(i, j)]));
                }
            }
        }
        Factor {
            dim: m.nrows(),
            entries,
        }
    }

    pub fn adjoint(&self) -> Self {
        let mut entries: Vec<_> = self.entries.iter().map(|&(i, j, v)| (j, i, v.conj())).collect();
        entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        Factor { dim: self.dim, entries }
    }
}

/// coeff * (tensor product of factors), identity on unlisted modes.
#[derive(Debug, Clone)]
pub struct ProductTerm {
    pub coeff: C64,
    /// (mode, factor) sorted by mode
    pub factors: Vec<(usize, Arc<Factor>)>,
}

/// Lazy sum of tensor-product terms plus an optional diagonal.
#[derive(Debug, Clone)]
pub struct KronSum {
    pub dims: Vec<usize>,
    pub constant: f64,
    pub diag: Option<Vec<f64>>,
    pub terms: Vec<ProductTerm>,
}

/// y = (A on `mode`) x for a state laid out with the last mode fastest.
pub fn apply_mode(dims: &[usize], mode: usize, a: &Factor, x: &[C64], y: &mut [C64]) {
    let d = dims[mode];
    let right: usize = dims[mode + 1..].iter().product();
    let left = x.len() / (d * right);
    for v in y.iter_mut() {
        *v = c(0.0);
    }
    for l in 0..left {
        let base = l * d * right;
        for &(i, j, v) in &a.entries {
            let yo = base + i * right;
            let xo = base + j * right;
            for r in 0..right {
                y[yo + r] += v * x[xo + r];
            }
        }
    }
}

impl KronSum {
    pub fn new(dims: Vec<usize>) -> Self {
        KronSum {
            dims,
            constant: 0.0,
            diag: None,
            terms: Vec::new(),
        }
    }

    pub fn push(&mut self, coeff: C64, mut factors: Vec<(usize, Arc<Factor>)>) {
        if coeff.norm() == 0.0 {
            return;
        }
        factors.sort_by_key(|f| f.0);
        self.terms.push(ProductTerm { coeff, factors });
    }

    /// Add coeff * A to the term list on one mode.
    pub fn push_single(&mut self, coeff: f64, mode: usize, a: &CMat) {
        self.push(c(coeff), vec![(mode, Arc::new(Factor::new(a)))]);
    }

    pub fn add_diagonal(&mut self, d: &[f64]) {
        match &mut self.diag {
            Some(v) => {
                for (a, b) in v.iter_mut().zip(d) {
                    *a += b;
                }
            }
            None => self.diag = Some(d.to_vec()),
        }
    }

    /// Expand into compressed sparse form.
    pub fn to_csr(&self) -> OperatorMatrix {
        let dim = self.dim();
        let mut t: Vec<(usize, usize, C64)> = Vec::new();
        if self.constant != 0.0 || self.diag.is_some() {
            for i in 0..dim {
                let d = self.constant + self.diag.as_ref().map_or(0.0, |v| v[i]);
                t.push((i, i, c(d)));
            }
        }
        for term in &self.terms {
            let mut cur = vec![(0usize, 0usize, term.coeff)];
            let mut fi = 0;
            for (mode, &d) in self.dims.iter().enumerate() {
                let mut next = Vec::new();
                if fi < term.factors.len() && term.factors[fi].0 == mode {
                    let f = &term.factors[fi].1;
                    fi += 1;
                    for &(r, col, v) in &cur {
                        for &(i, j, a) in &f.entries {
                            next.push((r * d + i, col * d + j, v * a));
                        }
                    }
                } else {
                    for &(r, col, v) in &cur {
                        for i in 0..d {
                            next.push((r * d + i, col * d + i, v));
                        }
                    }
                }
                cur = next;
            }
            t.extend(cur);
        }
        OperatorMatrix::from_triplets(dim, self.dims.clone(), t)
    }
}

impl LinearOperator for KronSum {
    fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let n = x.len();
        match &self.diag {
            Some(d) => {
                for i in 0..n {
                    y[i] = x[i] * (d[i] + self.constant);
                }
            }
            None => {
                for i in 0..n {
                    y[i] = x[i] * self.constant;
                }
            }
        }
        let mut a = vec![c(0.0); n];
        let mut b = vec![c(0.0); n];
        for term in &self.terms {
            // result always ends in `a`; `b` holds the previous stage
            for (k, (mode, f)) in term.factors.iter().enumerate() {
                if k == 0 {
                    apply_mode(&self.dims, *mode, f, x, &mut a);
                } else {
                    std::mem::swap(&mut a, &mut b);
                    apply_mode(&self.dims, *mode, f, &b, &mut a);
                }
            }
            let out: &[C64] = if term.factors.is_empty() { x } else { &a };
            for i in 0..n {
                y[i] += term.coeff * out[i];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::kron;

    #[test]
    fn lazy_apply_matches_csr_and_dense() {
        let a = CMat::from_fn(2, 2, |i, j| C64::new((i + 2 * j) as f64, i as f64 - j as f64));
        let b = CMat::from_fn(3, 3, |i, j| C64::new(1.0 + (i * j) as f64, 0.5));
        let mut ks = KronSum::new(vec![2, 3]);
        ks.constant = 0.25;
        ks.push(
            C64::new(0.5, 0.1),
            vec![(0, Arc::new(Factor::new(&a))), (1, Arc::new(Factor::new(&b)))],
        );
        ks.push_single(2.0, 1, &b);
        let dense = kron(&a, &b) * C64::new(0.5, 0.1)
            + kron(&CMat::identity(2, 2), &b) * c(2.0)
            + CMat::identity(6, 6) * c(0.25);
        assert!((ks.to_dense() - &dense).norm() < 1e-13);
        assert!((ks.to_csr().to_dense() - &dense).norm() < 1e-13);
    }
}
