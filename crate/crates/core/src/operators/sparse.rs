use std::fmt::Write as _;

use crate::linalg::{c, CMat, LinearOperator, C64};
use crate::units::fmt_e12;
use crate::{Error, Result};

/// Entries with magnitude at or below this are dropped when building.
pub const DROP_TOL: f64 = 1e-14;

/// Complex sparse matrix in compressed-row form. `dims` lists the mode
/// dimensions whose product is the matrix dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    pub dim: usize,
    pub dims: Vec<usize>,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<C64>,
}

impl OperatorMatrix {
    /// Build from triplets; duplicates are summed in a fixed order.
    pub fn from_triplets(dim: usize, dims: Vec<usize>, mut t: Vec<(usize, usize, C64)>) -> Self {
        t.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0; dim + 1];
        let mut cols = Vec::with_capacity(t.len());
        let mut vals: Vec<C64> = Vec::with_capacity(t.len());
        let mut rows = Vec::with_capacity(t.len());
        for (r, col, v) in t {
            if let (Some(&lr), Some(&lc)) = (rows.last(), cols.last()) {
                if lr == r && lc == col {
                    *vals.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows.push(r);
            cols.push(col);
            vals.push(v);
        }
        let mut keep_cols = Vec::with_capacity(cols.len());
        let mut keep_vals = Vec::with_capacity(vals.len());
        for ((r, col), v) in rows.into_iter().zip(cols).zip(vals) {
            if v.norm() > DROP_TOL {
                row_ptr[r + 1] += 1;
                keep_cols.push(col);
                keep_vals.push(v);
            }
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        OperatorMatrix {
            dim,
            dims,
            row_ptr,
            cols: keep_cols,
            vals: keep_vals,
        }
    }

    pub fn from_dense(m: &CMat) -> Self {
        let n = m.nrows();
        let mut t = Vec::new();
        for i in 0..n {
            for j in 0..n {
                t.push((i, j, m[(i, j)]));
            }
        }
        Self::from_triplets(n, vec![n], t)
    }

    pub fn identity(dims: Vec<usize>) -> Self {
        let dim = dims.iter().product();
        Self::from_triplets(dim, dims, (0..dim).map(|i| (i, i, c(1.0))).collect())
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim)
            .flat_map(move |r| (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.vals[k])))
    }

    pub fn get(&self, r: usize, col: usize) -> C64 {
        let (lo, hi) = (self.row_ptr[r], self.row_ptr[r + 1]);
        match self.cols[lo..hi].binary_search(&col) {
            Ok(k) => self.vals[lo + k],
            Err(_) => c(0.0),
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(
            self.dim,
            self.dims.clone(),
            self.triplets().map(|(r, col, v)| (col, r, v.conj())).collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::Numeric("dimension mismatch in operator sum".into()));
        }
        Ok(Self::from_triplets(
            self.dim,
            self.dims.clone(),
            self.triplets().chain(other.triplets()).collect(),
        ))
    }

    pub fn scaled(&self, s: C64) -> Self {
        let mut out = self.clone();
        for v in &mut out.vals {
            *v *= s;
        }
        out
    }

    /// Sparse product self * other.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::Numeric("dimension mismatch in operator product".into()));
        }
        let mut t = Vec::new();
        for (r, k, v) in self.triplets() {
            for j in other.row_ptr[k]..other.row_ptr[k + 1] {
                t.push((r, other.cols[j], v * other.vals[j]));
            }
        }
        Ok(Self::from_triplets(self.dim, self.dims.clone(), t))
    }

    /// max |A_ij - conj(A_ji)|
    pub fn max_anti_hermitian(&self) -> f64 {
        self.triplets()
            .map(|(r, col, v)| (v - self.get(col, r).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Upper bound on the spectral radius (maximum absolute row sum).
    pub fn gershgorin_bound(&self) -> f64 {
        (0..self.dim)
            .map(|r| {
                (self.row_ptr[r]..self.row_ptr[r + 1])
                    .map(|k| self.vals[k].norm())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// Text dump: a `dim` line then `row col re im` per stored entry.
    pub fn dump(&self) -> String {
        let mut s = format!("dim {}\n", self.dim);
        for (r, col, v) in self.triplets() {
            let _ = writeln!(s, "{r} {col} {} {}", fmt_e12(v.re), fmt_e12(v.im));
        }
        s
    }
}

impl LinearOperator for OperatorMatrix {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        for r in 0..self.dim {
            let mut acc = c(0.0);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            y[r] = acc;
        }
    }

    fn to_dense(&self) -> CMat {
        let mut m = CMat::zeros(self.dim, self.dim);
        for (r, col, v) in self.triplets() {
            m[(r, col)] = v;
        }
        m
    }
}

/// Kronecker embedding of a single-mode operator: identities on all other modes.
pub fn tensor_embed(op: &CMat, mode: usize, dims: &[usize]) -> Result<OperatorMatrix> {
    if mode >= dims.len() {
        return Err(Error::Numeric(format!(
            "mode index {mode} out of range for {} modes",
            dims.len()
        )));
    }
    if op.nrows() != dims[mode] || op.ncols() != dims[mode] {
        return Err(Error::Numeric(format!(
            "operator is {}x{} but mode {mode} has dimension {}",
            op.nrows(),
            op.ncols(),
            dims[mode]
        )));
    }
    let left: usize = dims[..mode].iter().product();
    let right: usize = dims[mode + 1..].iter().product();
    let d = dims[mode];
    let dim = left * d * right;
    let mut entries = Vec::new();
    for i in 0..d {
        for j in 0..d {
            let v = op[(i, j)];
            if v.norm() > DROP_TOL {
                entries.push((i, j, v));
            }
        }
    }
    let mut t = Vec::with_capacity(left * right * entries.len());
    for l in 0..left {
        for &(i, j, v) in &entries {
            for r in 0..right {
                t.push(((l * d + i) * right + r, (l * d + j) * right + r, v));
            }
        }
    }
    Ok(OperatorMatrix::from_triplets(dim, dims.to_vec(), t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{kron, I};

    fn small(n: usize, seed: u64) -> CMat {
        let mut s = seed;
        CMat::from_fn(n, n, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let a = ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5;
            C64::new(a, 0.3 * a * a)
        })
    }

    #[test]
    fn embed_matches_dense_kron() {
        let a = small(2, 1);
        let b = small(3, 2);
        let dims = [2, 3, 2];
        let ea = tensor_embed(&a, 0, &dims).unwrap().to_dense();
        let eb = tensor_embed(&b, 1, &dims).unwrap().to_dense();
        let id2 = CMat::identity(2, 2);
        let id3 = CMat::identity(3, 3);
        assert!((ea.clone() - kron(&kron(&a, &id3), &id2)).norm() < 1e-14);
        assert!((eb.clone() - kron(&kron(&id2, &b), &id2)).norm() < 1e-14);
        // operators on different modes commute
        assert!((&ea * &eb - &eb * &ea).norm() < 1e-12);
        assert!(tensor_embed(&a, 3, &dims).is_err());
    }

    #[test]
    fn embed_identity_is_identity() {
        let e = tensor_embed(&CMat::identity(3, 3), 1, &[2, 3]).unwrap();
        assert_eq!(e, OperatorMatrix::identity(vec![2, 3]));
    }

    #[test]
    fn csr_roundtrip_and_apply() {
        let m = small(5, 3) + CMat::identity(5, 5) * I;
        let s = OperatorMatrix::from_dense(&m);
        assert_eq!(s.to_dense(), m);
        let x: Vec<C64> = (0..5).map(|k| C64::new(k as f64, 1.0)).collect();
        let mut y = vec![c(0.0); 5];
        s.apply(&x, &mut y);
        let yd = &m * crate::linalg::CVec::from_vec(x.clone());
        for k in 0..5 {
            assert!((y[k] - yd[k]).norm() < 1e-14);
        }
        let p = s.matmul(&s.adjoint()).unwrap();
        assert!(p.max_anti_hermitian() < 1e-14);
        assert!(s.dump().starts_with("dim 5\n"));
    }
}
