use std::fmt::Write as _;

use crate::linalg::{c, max_anti_hermitian, CMat, C64, I};
use crate::units::fmt_e12;
use crate::{Error, Result};

const LETTERS: [char; 4] = ['I', 'x', 'y', 'z'];

/// Element <a|sigma_p|b> for single-qubit Pauli p (0=I, 1=x, 2=y, 3=z).
fn single(p: usize, a: usize, b: usize) -> C64 {
    match (p, a, b) {
        (0, a, b) if a == b => c(1.0),
        (1, a, b) if a != b => c(1.0),
        (2, 0, 1) => -I,
        (2, 1, 0) => I,
        (3, 0, 0) => c(1.0),
        (3, 1, 1) => c(-1.0),
        _ => c(0.0),
    }
}

/// Coefficients of all 4^N Pauli strings. String index digits are base 4,
/// qubit 0 most significant, matching the Kronecker order of the register.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliHamiltonian {
    pub n: usize,
    pub coeffs: Vec<f64>,
}

impl PauliHamiltonian {
    pub fn zeros(n: usize) -> Self {
        PauliHamiltonian {
            n,
            coeffs: vec![0.0; 1 << (2 * n)],
        }
    }

    /// Per-qubit Pauli indices of string `s`.
    pub fn digits(&self, s: usize) -> Vec<usize> {
        (0..self.n).map(|q| (s >> (2 * (self.n - 1 - q))) & 3).collect()
    }

    pub fn index(&self, digits: &[usize]) -> usize {
        digits.iter().fold(0, |acc, &d| acc * 4 + d)
    }

    pub fn label(&self, s: usize) -> String {
        self.digits(s).into_iter().map(|d| LETTERS[d]).collect()
    }

    fn parse_label(&self, label: &str) -> Option<usize> {
        let ds: Option<Vec<usize>> = label.chars().map(|ch| LETTERS.iter().position(|&l| l == ch)).collect();
        let ds = ds?;
        (ds.len() == self.n).then(|| self.index(&ds))
    }

    /// Coefficient by label such as "zI"; unknown labels read as zero.
    pub fn get(&self, label: &str) -> f64 {
        self.parse_label(label).map_or(0.0, |i| self.coeffs[i])
    }

    pub fn set(&mut self, label: &str, v: f64) -> Result<()> {
        let i = self
            .parse_label(label)
            .ok_or_else(|| Error::Usage(format!("bad Pauli label '{label}' for {} qubits", self.n)))?;
        self.coeffs[i] = v;
        Ok(())
    }

    /// Largest coefficient magnitude excluding the identity string.
    pub fn scale(&self) -> f64 {
        self.coeffs.iter().skip(1).fold(0.0f64, |a, x| a.max(x.abs()))
    }

    /// (label, value) for every string with |value| > tol.
    pub fn nonzero(&self, tol: f64) -> Vec<(String, f64)> {
        (0..self.coeffs.len())
            .filter(|&i| self.coeffs[i].abs() > tol)
            .map(|i| (self.label(i), self.coeffs[i]))
            .collect()
    }

    /// Structured report lines: "label value".
    pub fn report(&self) -> String {
        let mut s = String::new();
        for i in 0..self.coeffs.len() {
            let _ = writeln!(s, "{} {}", self.label(i), fmt_e12(self.coeffs[i]));
        }
        s
    }

    /// Conjugate qubit `q` by a rotation acting on its Bloch components:
    /// sigma_a -> sum_b r[a][b] sigma_b for a, b in (x, y, z).
    pub fn rotate_qubit(&self, q: usize, r: &[[f64; 3]; 3]) -> Self {
        let mut out = PauliHamiltonian::zeros(self.n);
        for s in 0..self.coeffs.len() {
            let v = self.coeffs[s];
            if v == 0.0 {
                continue;
            }
            let mut d = self.digits(s);
            let a = d[q];
            if a == 0 {
                out.coeffs[s] += v;
                continue;
            }
            for b in 1..4 {
                d[q] = b;
                out.coeffs[self.index(&d)] += v * r[a - 1][b - 1];
            }
        }
        out
    }
}

/// h_eta = Tr(H sigma_eta) / 2^N for a Hermitian 2^N x 2^N matrix.
pub fn pauli_decompose(h: &CMat) -> Result<PauliHamiltonian> {
    let dim = h.nrows();
    if dim == 0 || !dim.is_power_of_two() || h.ncols() != dim {
        return Err(Error::Numeric(format!(
            "Pauli decomposition needs a 2^N square matrix, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    let scale = h.iter().fold(0.0f64, |a, x| a.max(x.norm())).max(f64::MIN_POSITIVE);
    let ah = max_anti_hermitian(h);
    if ah > 1e-10 * scale {
        return Err(Error::Numeric(format!(
            "matrix is not Hermitian (max anti-Hermitian component {ah:.3e})"
        )));
    }
    let n = dim.trailing_zeros() as usize;
    let mut out = PauliHamiltonian::zeros(n);
    for s in 0..out.coeffs.len() {
        let d = out.digits(s);
        // sigma_eta maps |b> to a single |a>: flip the x/y bits
        let flip = d
            .iter()
            .fold(0usize, |acc, &p| (acc << 1) | usize::from(p == 1 || p == 2));
        let mut tr = c(0.0);
        for b in 0..dim {
            let a = b ^ flip;
            let mut el = c(1.0);
            for (q, &p) in d.iter().enumerate() {
                let sh = n - 1 - q;
                el *= single(p, (a >> sh) & 1, (b >> sh) & 1);
            }
            // Tr(H sigma) = sum_b H[b, a] sigma[a, b]
            tr += h[(b, a)] * el;
        }
        out.coeffs[s] = tr.re / dim as f64;
    }
    Ok(out)
}

/// Sum_eta h_eta sigma_eta.
pub fn pauli_reconstruct(p: &PauliHamiltonian) -> CMat {
    let n = p.n;
    let dim = 1usize << n;
    let mut h = CMat::zeros(dim, dim);
    for s in 0..p.coeffs.len() {
        let v = p.coeffs[s];
        if v == 0.0 {
            continue;
        }
        let d = p.digits(s);
        let flip = d
            .iter()
            .fold(0usize, |acc, &q| (acc << 1) | usize::from(q == 1 || q == 2));
        for b in 0..dim {
            let a = b ^ flip;
            let mut el = c(v);
            for (q, &pq) in d.iter().enumerate() {
                let sh = n - 1 - q;
                el *= single(pq, (a >> sh) & 1, (b >> sh) & 1);
            }
            h[(a, b)] += el;
        }
    }
    h
}

/// Rotation about y by angle t on Bloch components (x, y, z).
pub fn y_rotation(t: f64) -> [[f64; 3]; 3] {
    let (s, co) = t.sin_cos();
    [[co, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, co]]
}

/// Rotation about z by angle t on Bloch components (x, y, z).
pub fn z_rotation(t: f64) -> [[f64; 3]; 3] {
    let (s, co) = t.sin_cos();
    [[co, s, 0.0], [-s, co, 0.0], [0.0, 0.0, 1.0]]
}

/// Per-qubit z rotations that null every single-qubit y coefficient and
/// make single-qubit x coefficients non-positive.
pub fn gauge_fix(p: &PauliHamiltonian) -> PauliHamiltonian {
    let mut out = p.clone();
    for q in 0..p.n {
        let mut d = vec![0; p.n];
        d[q] = 1;
        let hx = out.coeffs[out.index(&d)];
        d[q] = 2;
        let hy = out.coeffs[out.index(&d)];
        let r = (hx * hx + hy * hy).sqrt();
        if r == 0.0 || (hy.abs() <= 1e-14 * r && hx < 0.0) {
            continue;
        }
        // rotate (hx, hy) onto (-r, 0)
        let t = (hy).atan2(hx) - std::f64::consts::PI;
        out = out.rotate_qubit(q, &z_rotation(-t));
        let mut d2 = vec![0; p.n];
        d2[q] = 2;
        let i = out.index(&d2);
        if out.coeffs[i].abs() < 1e-14 * r {
            out.coeffs[i] = 0.0;
        }
    }
    out
}

/// Choose per-qubit pi rotations (about x, y or z) bringing `cur` closest
/// to `prev`; keeps sweep curves continuous.
pub fn align_signs(prev: &PauliHamiltonian, cur: &PauliHamiltonian) -> PauliHamiltonian {
    let flips: [[[f64; 3]; 3]; 4] = [
        [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -1.0]],
        [[-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]],
        [[-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]],
    ];
    let mut best = cur.clone();
    let mut best_d = f64::INFINITY;
    for choice in 0..(1usize << (2 * cur.n)) {
        let mut t = cur.clone();
        for q in 0..cur.n {
            let f = (choice >> (2 * q)) & 3;
            if f != 0 {
                t = t.rotate_qubit(q, &flips[f]);
            }
        }
        let d: f64 = t.coeffs.iter().zip(&prev.coeffs).map(|(a, b)| (a - b) * (a - b)).sum();
        if d < best_d - 1e-15 {
            best_d = d;
            best = t;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eigh, kron};

    fn pauli(p: usize) -> CMat {
        CMat::from_fn(2, 2, |a, b| single(p, a, b))
    }

    #[test]
    fn zz_and_identity() {
        let zz = kron(&pauli(3), &pauli(3));
        let p = pauli_decompose(&zz).unwrap();
        assert_eq!(p.get("zz"), 1.0);
        assert_eq!(p.nonzero(1e-15).len(), 1);
        let id = pauli_decompose(&CMat::identity(4, 4)).unwrap();
        assert_eq!(id.get("II"), 1.0);
        assert_eq!(id.nonzero(1e-15).len(), 1);
    }

    #[test]
    fn xy_string_ordering() {
        let m = kron(&pauli(1), &pauli(2));
        let p = pauli_decompose(&m).unwrap();
        assert_eq!(p.get("xy"), 1.0);
        assert_eq!(p.get("yx"), 0.0);
    }

    #[test]
    fn non_hermitian_rejected() {
        let mut m = CMat::identity(2, 2);
        m[(0, 1)] = c(1.0);
        assert!(pauli_decompose(&m).is_err());
    }

    #[test]
    fn rotation_preserves_spectrum_and_gauge_nulls_y() {
        let mut p = PauliHamiltonian::zeros(2);
        for (l, v) in [
            ("xI", 0.4),
            ("yI", -0.3),
            ("Iz", 0.2),
            ("xz", 0.1),
            ("yy", 0.5),
            ("Ix", 0.7),
        ] {
            p.set(l, v).unwrap();
        }
        let (w0, _) = eigh(&pauli_reconstruct(&p));
        let g = gauge_fix(&p);
        assert!(g.get("yI").abs() < 1e-14 && g.get("xI") < 0.0 && g.get("Ix") < 0.0);
        let r = g.rotate_qubit(1, &y_rotation(0.37));
        let (w1, _) = eigh(&pauli_reconstruct(&r));
        for k in 0..4 {
            assert!((w0[k] - w1[k]).abs() < 1e-13);
        }
        let a = align_signs(&p, &g);
        let d: f64 = a.coeffs.iter().zip(&p.coeffs).map(|(x, y)| (x - y).abs()).sum();
        assert!(d <= g.coeffs.iter().zip(&p.coeffs).map(|(x, y)| (x - y).abs()).sum::<f64>() + 1e-12);
    }
}
