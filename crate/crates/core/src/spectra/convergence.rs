use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;

use super::lanczos::{lowest_eigenpairs, SolverOptions};
use crate::circuit::{assemble_symbolic_hamiltonian, BasisSpec, CircuitSpec};
use crate::operators::{assemble_hamiltonian, mode_bases};
use crate::units::fmt_e12;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct ConvergenceRow {
    /// per-mode cutoff: nmax for oscillator modes, charge cutoff for charge modes
    pub truncations: Vec<usize>,
    pub dim: usize,
    /// eigenvalues, or the solver error message when the row failed
    pub values: std::result::Result<Vec<f64>, String>,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// per eigenvalue index: first row from which every later row agrees with
    /// the final row within the study tolerance
    pub converged_at: Vec<Option<usize>>,
    pub tol: f64,
}

/// Copy of `spec` with the basis cutoffs replaced.
pub fn with_truncations(spec: &CircuitSpec, cut: &[usize]) -> Result<CircuitSpec> {
    if cut.len() != spec.bases.len() {
        return Err(Error::Usage(format!(
            "truncation row has {} entries for {} modes",
            cut.len(),
            spec.bases.len()
        )));
    }
    let mut out = spec.clone();
    for (b, &n) in out.bases.iter_mut().zip(cut) {
        match b {
            BasisSpec::Ho { nmax, .. } => *nmax = n,
            BasisSpec::Charge { cutoff, .. } => *cutoff = n,
        }
    }
    Ok(out)
}

fn dimension(spec: &CircuitSpec) -> usize {
    spec.bases
        .iter()
        .map(|b| match b {
            BasisSpec::Ho { nmax, .. } => nmax + 1,
            BasisSpec::Charge { cutoff, .. } => 2 * cutoff + 1,
        })
        .product()
}

fn solve_row(spec: &CircuitSpec, k: usize, opts: &SolverOptions) -> Result<Vec<f64>> {
    let sym = assemble_symbolic_hamiltonian(spec)?;
    let bases = mode_bases(&sym, &spec.bases)?;
    let h = assemble_hamiltonian(&sym, &bases)?;
    Ok(lowest_eigenpairs(&h, k, opts)?.values)
}

/// Lowest k eigenvalues along a schedule of truncations. Rows are solved in
/// parallel; a failing row is recorded and the study continues.
pub fn convergence_study(
    spec: &CircuitSpec,
    schedule: &[Vec<usize>],
    k: usize,
    tol: f64,
    opts: &SolverOptions,
) -> Result<ConvergenceTable> {
    if schedule.is_empty() {
        return Err(Error::Usage("empty truncation schedule".into()));
    }
    for w in schedule.windows(2) {
        if w[0].len() != w[1].len() || w[0].iter().zip(&w[1]).any(|(a, b)| b < a) {
            return Err(Error::Usage(
                "truncation schedule must be monotone in every mode".into(),
            ));
        }
    }
    let specs: Vec<CircuitSpec> = schedule
        .iter()
        .map(|cut| with_truncations(spec, cut))
        .collect::<Result<_>>()?;
    let rows: Vec<ConvergenceRow> = specs
        .par_iter()
        .zip(schedule.par_iter())
        .map(|(s, cut)| {
            let t0 = Instant::now();
            let values = solve_row(s, k, opts).map_err(|e| e.to_string());
            ConvergenceRow {
                truncations: cut.clone(),
                dim: dimension(s),
                values,
                seconds: t0.elapsed().as_secs_f64(),
            }
        })
        .collect();
    let converged_at = flag_convergence(&rows, k, tol);
    Ok(ConvergenceTable {
        rows,
        converged_at,
        tol,
    })
}

fn flag_convergence(rows: &[ConvergenceRow], k: usize, tol: f64) -> Vec<Option<usize>> {
    let last = match rows.last().map(|r| &r.values) {
        Some(Ok(v)) => v.clone(),
        _ => return vec![None; k],
    };
    (0..k)
        .map(|i| {
            let mut first = None;
            for (r, row) in rows.iter().enumerate().rev() {
                let ok = match &row.values {
                    Ok(v) => (v[i] - last[i]).abs() <= tol * last[i].abs().max(f64::MIN_POSITIVE),
                    Err(_) => false,
                };
                if !ok {
                    break;
                }
                first = Some(r);
            }
            first
        })
        .collect()
}

impl ConvergenceTable {
    /// CSV: truncations, N, eigenvalues (GHz), wall time, converged-count column.
    pub fn to_csv(&self) -> String {
        let k = self.converged_at.len();
        let mut s = String::from("truncations,N");
        for i in 0..k {
            let _ = write!(s, ",E{i}");
        }
        s.push_str(",seconds,converged,error\n");
        for (r, row) in self.rows.iter().enumerate() {
            let cut: Vec<String> = row.truncations.iter().map(|x| x.to_string()).collect();
            let _ = write!(s, "{},{}", cut.join(" "), row.dim);
            match &row.values {
                Ok(v) => {
                    for x in v {
                        let _ = write!(s, ",{}", fmt_e12(*x));
                    }
                }
                Err(_) => s.push_str(&",".repeat(k)),
            }
            let conv = self.converged_at.iter().filter(|c| c.is_some_and(|c| c <= r)).count();
            let err = row
                .values
                .as_ref()
                .err()
                .map(|e| e.replace(',', ";"))
                .unwrap_or_default();
            let _ = writeln!(s, ",{:.6},{conv},{err}", row.seconds);
        }
        s
    }
}
