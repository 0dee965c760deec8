//! Small dense linear-algebra helpers on complex matrices and a generic
//! matrix-free operator trait.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// A Hermitian linear operator that can be applied to vectors.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    /// y = A x (y is overwritten).
    fn apply(&self, x: &[C64], y: &mut [C64]);

    /// Dense representation, built column by column.
    fn to_dense(&self) -> CMat {
        let n = self.dim();
        let mut m = CMat::zeros(n, n);
        let mut e = vec![C64::new(0.0, 0.0); n];
        let mut col = vec![C64::new(0.0, 0.0); n];
        for j in 0..n {
            e[j] = c(1.0);
            self.apply(&e, &mut col);
            for i in 0..n {
                m[(i, j)] = col[i];
            }
            e[j] = c(0.0);
        }
        m
    }
}

impl LinearOperator for CMat {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let n = self.nrows();
        for v in y.iter_mut() {
            *v = c(0.0);
        }
        for j in 0..n {
            let xj = x[j];
            if xj == c(0.0) {
                continue;
            }
            let col = self.column(j);
            for i in 0..n {
                y[i] += col[i] * xj;
            }
        }
    }

    fn to_dense(&self) -> CMat {
        self.clone()
    }
}

pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale(v: &mut [C64], s: C64) {
    for x in v.iter_mut() {
        *x *= s;
    }
}

/// Make the largest-magnitude component real and positive.
pub fn phase_normalize(v: &mut [C64]) {
    let mut best = 0;
    let mut bmag = -1.0;
    for (i, x) in v.iter().enumerate() {
        // small relative slack keeps the choice stable between near-equal entries
        let m = x.norm();
        if m > bmag * (1.0 + 1e-9) {
            bmag = m;
            best = i;
        }
    }
    if bmag > 0.0 {
        let ph = v[best].conj() / bmag;
        scale(v, ph);
        v[best] = c(v[best].re);
    }
}

/// Eigen-decomposition of a Hermitian matrix: ascending eigenvalues and
/// phase-normalized eigenvector columns.
pub fn eigh(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    let herm = hermitian_part(m);
    let se = herm.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        se.eigenvalues[a]
            .partial_cmp(&se.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let vals: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vecs = CMat::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        let mut col: Vec<C64> = se.eigenvectors.column(i).iter().cloned().collect();
        phase_normalize(&mut col);
        for r in 0..n {
            vecs[(r, k)] = col[r];
        }
    }
    (vals, vecs)
}

/// Ascending eigen-decomposition of a real symmetric matrix.
pub fn eigh_real(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let sym = (m + m.transpose()) * 0.5;
    let se = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        se.eigenvalues[a]
            .partial_cmp(&se.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let vals = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vecs.set_column(k, &se.eigenvectors.column(i));
    }
    (vals, vecs)
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * c(0.5)
}

/// max |A - A^dagger| over all entries.
pub fn max_anti_hermitian(m: &CMat) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMat::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij == c(0.0) {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

pub fn to_complex(m: &DMatrix<f64>) -> CMat {
    m.map(c)
}

/// f(A) for Hermitian A via its eigendecomposition.
pub fn herm_fn(m: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (w, v) = eigh(m);
    let d = CMat::from_diagonal(&CVec::from_iterator(w.len(), w.iter().map(|&x| c(f(x)))));
    &v * d * v.adjoint()
}

/// Orthonormalize columns in order with two passes of Gram-Schmidt.
/// Columns that become numerically dependent are dropped.
pub fn orthonormal_columns(m: &CMat, drop_tol: f64) -> CMat {
    let n = m.nrows();
    let mut cols: Vec<Vec<C64>> = Vec::new();
    for j in 0..m.ncols() {
        let mut v: Vec<C64> = m.column(j).iter().cloned().collect();
        let before = norm(&v);
        for _ in 0..2 {
            for q in &cols {
                let p = dot(q, &v);
                axpy(-p, q, &mut v);
            }
        }
        let nv = norm(&v);
        if nv > drop_tol * before.max(1e-300) {
            scale(&mut v, c(1.0 / nv));
            cols.push(v);
        }
    }
    let mut out = CMat::zeros(n, cols.len());
    for (j, v) in cols.iter().enumerate() {
        for i in 0..n {
            out[(i, j)] = v[i];
        }
    }
    out
}

/// Singular values of a complex matrix, descending.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().cloned().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

/// Spectral norm of a small dense matrix.
pub fn op_norm_dense(m: &CMat) -> f64 {
    singular_values(m).first().cloned().unwrap_or(0.0)
}

/// Operator-norm estimate of a Hermitian operator by power iteration.
pub fn op_norm_power(op: &dyn LinearOperator, steps: usize, rel_tol: f64) -> f64 {
    let n = op.dim();
    if n == 0 {
        return 0.0;
    }
    // deterministic start with unequal weights so no symmetry sector is missed
    let mut x: Vec<C64> = (0..n)
        .map(|i| c(1.0 + 0.5 * ((i as f64) * 0.7548776662).fract()))
        .collect();
    let nx = norm(&x);
    scale(&mut x, c(1.0 / nx));
    let mut y = vec![c(0.0); n];
    let mut est = 0.0;
    for _ in 0..steps {
        op.apply(&x, &mut y);
        let ny = norm(&y);
        if ny == 0.0 {
            return 0.0;
        }
        let done = (ny - est).abs() <= rel_tol * ny;
        est = ny;
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / ny;
        }
        if done {
            break;
        }
    }
    est
}

#[cfg(test)]
mod tests {
    use super::*;

    fn herm(n: usize, seed: u64) -> CMat {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let a = CMat::from_fn(n, n, |_, _| C64::new(next(), next()));
        hermitian_part(&a)
    }

    #[test]
    fn eigh_reconstructs() {
        let m = herm(7, 3);
        let (w, v) = eigh(&m);
        assert!(w.windows(2).all(|p| p[0] <= p[1]));
        let d = CMat::from_diagonal(&CVec::from_iterator(7, w.iter().map(|&x| c(x))));
        let r = &v * d * v.adjoint();
        assert!((r - &m).norm() < 1e-12);
        let id = v.adjoint() * &v;
        assert!((id - CMat::identity(7, 7)).norm() < 1e-12);
    }

    #[test]
    fn kron_of_identities() {
        let a = CMat::identity(2, 2);
        let b = CMat::identity(3, 3);
        assert_eq!(kron(&a, &b), CMat::identity(6, 6));
    }

    #[test]
    fn power_iteration_close_to_svd() {
        let m = herm(12, 9);
        let exact = op_norm_dense(&m);
        let est = op_norm_power(&m, 500, 1e-12);
        assert!((exact - est).abs() / exact < 1e-3);
    }

    #[test]
    fn gram_schmidt_drops_dependent() {
        let mut m = herm(5, 1).columns(0, 3).into_owned();
        let c0 = m.column(0).into_owned();
        m.set_column(2, &c0);
        let q = orthonormal_columns(&m, 1e-10);
        assert_eq!(q.ncols(), 2);
    }
}
