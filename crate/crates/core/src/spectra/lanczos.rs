use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{axpy, c, dot, eigh, norm, phase_normalize, scale, CMat, LinearOperator, C64};
use crate::{Error, Result};

/// Problems at or below this dimension are diagonalized densely.
pub const DENSE_LIMIT: usize = 512;

/// Eigenvalues closer than this times the norm estimate are flagged degenerate.
pub const DEGENERACY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// residual target relative to the operator-norm estimate
    pub tol: f64,
    /// seed for the vectors injected after Krylov breakdown
    pub seed: u64,
    pub max_restarts: usize,
    /// Krylov basis size; chosen from k when None
    pub basis: Option<usize>,
    /// force the dense path regardless of dimension
    pub dense: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-10,
            seed: 0,
            max_restarts: 400,
            basis: None,
            dense: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Dense,
    Lanczos,
}

/// Lowest eigenpairs in ascending order with unit-norm, phase-normalized columns.
#[derive(Debug, Clone)]
pub struct EigenSolution {
    pub values: Vec<f64>,
    pub vectors: CMat,
    pub residuals: Vec<f64>,
    pub degenerate: Vec<bool>,
    pub iterations: usize,
    pub tol: f64,
    pub norm_estimate: f64,
    pub solver: SolverKind,
}

impl EigenSolution {
    pub fn k(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, i: usize) -> Vec<C64> {
        self.vectors.column(i).iter().cloned().collect()
    }

    /// Worst residual relative to the norm estimate.
    pub fn worst_relative_residual(&self) -> f64 {
        let s = self.norm_estimate.max(f64::MIN_POSITIVE);
        self.residuals.iter().fold(0.0f64, |a, &r| a.max(r / s))
    }
}

fn degeneracy_flags(values: &[f64], scale: f64) -> Vec<bool> {
    let k = values.len();
    (0..k)
        .map(|i| {
            (i > 0 && values[i] - values[i - 1] <= DEGENERACY_TOL * scale)
                || (i + 1 < k && values[i + 1] - values[i] <= DEGENERACY_TOL * scale)
        })
        .collect()
}

fn residual(op: &dyn LinearOperator, v: &[C64], lambda: f64, buf: &mut [C64]) -> f64 {
    op.apply(v, buf);
    axpy(c(-lambda), v, buf);
    norm(buf)
}

fn dense_solve(op: &dyn LinearOperator, k: usize, tol: f64) -> EigenSolution {
    let h = op.to_dense();
    let (w, v) = eigh(&h);
    let n = op.dim();
    let vectors = v.columns(0, k).into_owned();
    let mut buf = vec![c(0.0); n];
    let residuals = (0..k)
        .map(|i| {
            let x: Vec<C64> = vectors.column(i).iter().cloned().collect();
            residual(op, &x, w[i], &mut buf)
        })
        .collect();
    let scale = w.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let values = w[..k].to_vec();
    EigenSolution {
        degenerate: degeneracy_flags(&values, scale),
        values,
        vectors,
        residuals,
        iterations: 0,
        tol,
        norm_estimate: scale,
        solver: SolverKind::Dense,
    }
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    (0..n)
        .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect()
}

struct Run {
    values: Vec<f64>,
    vectors: Vec<Vec<C64>>,
    /// unconverged Ritz pairs left over after locking
    rest: Option<Thick>,
}

/// Ritz values, vectors and their images; seeds a thick restart.
struct Thick {
    theta: Vec<f64>,
    basis: Vec<Vec<C64>>,
    products: Vec<Vec<C64>>,
}

enum Start {
    Vector(Vec<C64>),
    Thick(Thick),
}

struct Ctx<'a> {
    op: &'a dyn LinearOperator,
    opts: &'a SolverOptions,
    rng: ChaCha8Rng,
    hnorm: f64,
    iterations: usize,
}

/// Restarts after which a run hands back its converged leading pairs so they
/// can be locked; the rest seed the next run in their complement.
const LOCK_AFTER: usize = 5;

/// Restarts without progress after which a run seeded from a previous one
/// gives up; the next run starts from a random vector instead.
const STALL_AFTER: usize = 20;

impl Ctx<'_> {
    /// Orthogonalize against `locked` and the current basis together (two
    /// classical Gram-Schmidt passes), then normalize.
    fn admit(&self, locked: &[Vec<C64>], basis: &[Vec<C64>], r: &mut [C64]) -> f64 {
        for _ in 0..2 {
            for v in locked.iter().chain(basis) {
                let h = dot(v, r);
                axpy(-h, v, r);
            }
        }
        let nr = norm(r);
        if nr > 0.0 {
            scale(r, c(1.0 / nr));
        }
        nr
    }

    /// Thick-restart Lanczos for the `want` lowest pairs in the orthogonal
    /// complement of `locked`. Returns all `want` pairs once converged, or
    /// after `LOCK_AFTER` restarts the converged leading ones.
    fn run(&mut self, want: usize, start: Start, locked: &[Vec<C64>]) -> Result<Run> {
        let n = self.op.dim();
        let room = n - locked.len();
        let m = self
            .opts
            .basis
            .unwrap_or((2 * want + 20).max(40))
            .min(room)
            .max((want + 2).min(room));
        let mut basis: Vec<Vec<C64>> = Vec::with_capacity(m);
        let mut products: Vec<Vec<C64>> = Vec::with_capacity(m);
        let mut t = CMat::zeros(m, m);
        let op = self.op;
        let push = |basis: &mut Vec<Vec<C64>>, products: &mut Vec<Vec<C64>>, t: &mut CMat, v: Vec<C64>| {
            let mut w = vec![c(0.0); n];
            op.apply(&v, &mut w);
            let j = basis.len();
            for (i, u) in basis.iter().enumerate() {
                let h = dot(u, &w);
                t[(i, j)] = h;
                t[(j, i)] = h.conj();
            }
            t[(j, j)] = c(dot(&v, &w).re);
            basis.push(v);
            products.push(w);
        };

        let seeded = matches!(start, Start::Thick(_));
        match start {
            Start::Thick(mut th) => {
                let p = th.basis.len().min(m - 1);
                th.basis.truncate(p);
                th.products.truncate(p);
                for (j, &x) in th.theta[..p].iter().enumerate() {
                    t[(j, j)] = c(x);
                }
                basis = th.basis;
                products = th.products;
            }
            Start::Vector(mut v) => {
                if self.admit(locked, &basis, &mut v) <= 1e-12 {
                    v = random_vector(&mut self.rng, n);
                    self.admit(locked, &basis, &mut v);
                }
                push(&mut basis, &mut products, &mut t, v);
            }
        }
        let mut restarts = 0;
        loop {
            while basis.len() < m {
                let mut r = products.last().unwrap().clone();
                let before = norm(&r);
                let mut nr = self.admit(locked, &basis, &mut r);
                if nr <= 1e-10 * before.max(self.hnorm) {
                    // invariant subspace reached: continue from a fresh random direction
                    r = random_vector(&mut self.rng, n);
                    nr = self.admit(locked, &basis, &mut r);
                    if nr <= 1e-12 {
                        break;
                    }
                }
                push(&mut basis, &mut products, &mut t, r);
            }
            self.iterations += 1;
            restarts += 1;

            let p = basis.len();
            let (theta, s) = eigh(&t.view((0, 0), (p, p)).into_owned());
            self.hnorm = theta.iter().fold(self.hnorm, |a, x| a.max(x.abs()));

            let keep = (want + (m - want) / 2).min(p.saturating_sub(1)).max(want.min(p));
            let mut ritz: Vec<Vec<C64>> = Vec::with_capacity(keep);
            let mut hritz: Vec<Vec<C64>> = Vec::with_capacity(keep);
            for j in 0..keep {
                let mut y = vec![c(0.0); n];
                let mut hy = vec![c(0.0); n];
                for i in 0..p {
                    let sij = s[(i, j)];
                    if sij != c(0.0) {
                        axpy(sij, &basis[i], &mut y);
                        axpy(sij, &products[i], &mut hy);
                    }
                }
                ritz.push(y);
                hritz.push(hy);
            }
            let got = want.min(p);
            let res: Vec<f64> = (0..got)
                .map(|j| {
                    // residual of the deflated problem: locked pairs are only
                    // converged to tolerance, so their leak is excluded
                    let mut r = hritz[j].clone();
                    axpy(c(-theta[j]), &ritz[j], &mut r);
                    for v in locked {
                        let h = dot(v, &r);
                        axpy(-h, v, &mut r);
                    }
                    norm(&r)
                })
                .collect();
            let limit = self.opts.tol * self.hnorm;
            let prefix = res.iter().take_while(|&&r| r <= limit).count();
            if prefix == got || p == room {
                ritz.truncate(got);
                return Ok(Run {
                    values: theta[..got].to_vec(),
                    vectors: ritz,
                    rest: None,
                });
            }
            if prefix == 0 && seeded && restarts >= STALL_AFTER {
                return Ok(Run {
                    values: Vec::new(),
                    vectors: Vec::new(),
                    rest: None,
                });
            }
            if prefix > 0 && restarts >= LOCK_AFTER {
                let rest = Thick {
                    theta: theta[prefix..keep].to_vec(),
                    basis: ritz.split_off(prefix),
                    products: hritz.split_off(prefix),
                };
                return Ok(Run {
                    values: theta[..prefix].to_vec(),
                    vectors: ritz,
                    rest: Some(rest),
                });
            }
            if self.iterations >= self.opts.max_restarts {
                let worst = res.iter().cloned().fold(0.0, f64::max);
                return Err(Error::NoConvergence {
                    iterations: self.iterations,
                    worst_residual: worst / self.hnorm.max(f64::MIN_POSITIVE),
                    residuals: res,
                });
            }
            basis = ritz;
            products = hritz;
            t.fill(c(0.0));
            for j in 0..keep {
                t[(j, j)] = c(theta[j]);
            }
        }
    }
}

/// k lowest eigenpairs of a Hermitian operator.
///
/// Thick-restart Lanczos with full reorthogonalization from the normalized
/// all-ones vector; the Rayleigh quotient matrix is formed from stored
/// products so restarts keep exact Ritz pairs. A Krylov space never leaves an
/// invariant subspace containing its start vector, so converged pairs are
/// locked and further seeded random runs in their complement pick up missed
/// lower eigenvalues (typically degenerate partners).
pub fn lowest_eigenpairs(op: &dyn LinearOperator, k: usize, opts: &SolverOptions) -> Result<EigenSolution> {
    let n = op.dim();
    if k == 0 || k >= n {
        return Err(Error::Usage(format!(
            "requested {k} eigenpairs of a {n}-dimensional operator (need 0 < k < dim)"
        )));
    }
    if opts.dense || n <= DENSE_LIMIT {
        return Ok(dense_solve(op, k, opts.tol));
    }
    let mut ctx = Ctx {
        op,
        opts,
        rng: ChaCha8Rng::seed_from_u64(opts.seed),
        hnorm: 0.0,
        iterations: 0,
    };
    let mut pairs: Vec<(f64, Vec<C64>)> = Vec::with_capacity(k);
    let mut start = Start::Vector(vec![c(1.0); n]);
    while pairs.len() < k {
        let locked: Vec<Vec<C64>> = pairs.iter().map(|p| p.1.clone()).collect();
        let run = ctx.run(k - pairs.len(), start, &locked)?;
        pairs.extend(run.values.into_iter().zip(run.vectors));
        start = match run.rest {
            Some(th) => Start::Thick(th),
            None => Start::Vector(random_vector(&mut ctx.rng, n)),
        };
    }
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    while pairs.len() < n {
        let locked: Vec<Vec<C64>> = pairs.iter().map(|p| p.1.clone()).collect();
        let start = Start::Vector(random_vector(&mut ctx.rng, n));
        let extra = ctx.run(1, start, &locked)?;
        let top = pairs[k - 1].0;
        match extra.values.first() {
            Some(&v) if v < top - opts.tol * ctx.hnorm => {
                pairs.push((v, extra.vectors.into_iter().next().unwrap()));
                pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                pairs.truncate(k);
            }
            _ => break,
        }
    }
    let (theta, ritz) = rayleigh_ritz(op, pairs.into_iter().map(|p| p.1).collect());
    Ok(finish(op, ritz, &theta, k, opts.tol, ctx.hnorm, ctx.iterations))
}

/// Rotate orthonormal vectors onto the eigenbasis of their Rayleigh quotient
/// matrix, removing mixing left over between separately locked pairs.
fn rayleigh_ritz(op: &dyn LinearOperator, vs: Vec<Vec<C64>>) -> (Vec<f64>, Vec<Vec<C64>>) {
    let n = op.dim();
    let k = vs.len();
    let hv: Vec<Vec<C64>> = vs
        .iter()
        .map(|v| {
            let mut w = vec![c(0.0); n];
            op.apply(v, &mut w);
            w
        })
        .collect();
    let m = CMat::from_fn(k, k, |i, j| dot(&vs[i], &hv[j]));
    let (theta, s) = eigh(&((&m + m.adjoint()) * c(0.5)));
    let rotated = (0..k)
        .map(|j| {
            let mut y = vec![c(0.0); n];
            for (i, v) in vs.iter().enumerate() {
                axpy(s[(i, j)], v, &mut y);
            }
            y
        })
        .collect();
    (theta, rotated)
}

fn finish(
    op: &dyn LinearOperator,
    mut ritz: Vec<Vec<C64>>,
    theta: &[f64],
    k: usize,
    tol: f64,
    hnorm: f64,
    iterations: usize,
) -> EigenSolution {
    let n = op.dim();
    let mut vectors = CMat::zeros(n, k);
    let mut residuals = Vec::with_capacity(k);
    let mut buf = vec![c(0.0); n];
    for (j, v) in ritz.iter_mut().take(k).enumerate() {
        let nv = norm(v);
        scale(v, c(1.0 / nv));
        phase_normalize(v);
        residuals.push(residual(op, v, theta[j], &mut buf));
        for i in 0..n {
            vectors[(i, j)] = v[i];
        }
    }
    let values = theta[..k].to_vec();
    EigenSolution {
        degenerate: degeneracy_flags(&values, hnorm),
        values,
        vectors,
        residuals,
        iterations,
        tol,
        norm_estimate: hnorm,
        solver: SolverKind::Lanczos,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::OperatorMatrix;

    fn random_hermitian(n: usize, seed: u64) -> CMat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = CMat::from_fn(n, n, |_, _| {
            C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        (&a + a.adjoint()) * c(0.5)
    }

    fn check(sol: &EigenSolution, tol: f64) {
        let k = sol.k();
        for i in 1..k {
            assert!(sol.values[i] >= sol.values[i - 1]);
        }
        let g = sol.vectors.adjoint() * &sol.vectors;
        assert!((g - CMat::identity(k, k)).norm() < 1e-10);
        for r in &sol.residuals {
            assert!(*r <= tol * sol.norm_estimate * 10.0, "{r}");
        }
    }

    #[test]
    fn identity_is_degenerate() {
        let id = CMat::identity(5, 5);
        let sol = lowest_eigenpairs(&id, 3, &SolverOptions::default()).unwrap();
        assert_eq!(sol.values, vec![1.0, 1.0, 1.0]);
        assert!(sol.degenerate.iter().all(|&d| d));
        check(&sol, 1e-10);
    }

    #[test]
    fn k_must_be_below_dim() {
        assert!(matches!(
            lowest_eigenpairs(&CMat::identity(3, 3), 3, &SolverOptions::default()),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn lanczos_matches_dense() {
        let h = random_hermitian(300, 7);
        let opts = SolverOptions::default();
        let dense = lowest_eigenpairs(&h, 6, &opts).unwrap();
        assert_eq!(dense.solver, SolverKind::Dense);
        check(&dense, 1e-10);
        let big = random_hermitian(700, 8);
        let it = lowest_eigenpairs(&big, 6, &opts).unwrap();
        assert_eq!(it.solver, SolverKind::Lanczos);
        let (w, _) = eigh(&big);
        for i in 0..6 {
            assert!((it.values[i] - w[i]).abs() <= 1e-9 * w[i].abs().max(1.0));
        }
        check(&it, 1e-10);
    }

    #[test]
    fn degenerate_sparse_operator_found() {
        // two identical uncoupled blocks: every level is doubly degenerate
        let n = 400;
        let mut trip = Vec::new();
        for blk in 0..2 {
            for i in 0..n {
                let o = blk * n;
                trip.push((o + i, o + i, c(2.0 + i as f64 * 0.01)));
                if i + 1 < n {
                    trip.push((o + i, o + i + 1, c(-1.0)));
                    trip.push((o + i + 1, o + i, c(-1.0)));
                }
            }
        }
        let h = OperatorMatrix::from_triplets(2 * n, vec![2 * n], trip);
        let sol = lowest_eigenpairs(&h, 4, &SolverOptions::default()).unwrap();
        assert_eq!(sol.solver, SolverKind::Lanczos);
        let (w, _) = eigh(&h.to_dense());
        for i in 0..4 {
            assert!((sol.values[i] - w[i]).abs() < 1e-8, "{} {}", sol.values[i], w[i]);
        }
        assert!(sol.degenerate[0] && sol.degenerate[1]);
        check(&sol, 1e-10);
    }

    #[test]
    fn fourfold_clusters_beyond_the_first_run() {
        // four identical chains plus a tiny splitting on one of them
        let n = 200;
        let mut trip = Vec::new();
        for blk in 0..4 {
            let o = blk * n;
            for i in 0..n {
                let shift = if blk == 3 { 1e-9 } else { 0.0 };
                trip.push((o + i, o + i, c(1.0 + i as f64 * 0.02 + shift)));
                if i + 1 < n {
                    trip.push((o + i, o + i + 1, c(-0.5)));
                    trip.push((o + i + 1, o + i, c(-0.5)));
                }
            }
        }
        let h = OperatorMatrix::from_triplets(4 * n, vec![4 * n], trip);
        let sol = lowest_eigenpairs(&h, 10, &SolverOptions::default()).unwrap();
        let (w, _) = eigh(&h.to_dense());
        for i in 0..10 {
            assert!((sol.values[i] - w[i]).abs() < 1e-8, "{i}: {} {}", sol.values[i], w[i]);
        }
        check(&sol, 1e-10);
    }
}
