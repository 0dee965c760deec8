//! Command-line front end: spectra, reductions, convergence studies and
//! method comparisons over parameter sweeps, written as CSV.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::circuit::{load_netlist, CircuitSpec, Netlist};
use crate::linalg::eigh;
use crate::model::{CircuitModel, CoupledModel};
use crate::reduce_multi::{
    align_signs, approximate_rotation_reduction, diagonal_reduction, pauli_reconstruct, schrieffer_wolff_reduction,
    PauliHamiltonian, QubitRegister, RotationOptions, DEFAULT_DIM_CAP, SIGN_THRESHOLD,
};
use crate::reduce_single::{
    instanton_reduction, local_reduction, perturbative_basis, perturbative_reduction, InstantonParams, LocalOptions,
    PauliCoefficients1Q, PerturbativeBasis,
};
use crate::spectra::{convergence_study, lowest_eigenpairs, SolverOptions};
use crate::units::fmt_e12;
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(
    name = "screduce",
    version,
    about = "Circuit spectra and effective qubit Hamiltonians"
)]
pub struct Cli {
    /// circuit or coupled-system netlist (JSON)
    #[arg(long, global = true)]
    pub netlist: Option<PathBuf>,
    /// output file; stdout when absent
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// worker threads for sweeps (default: all cores)
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// eigensolver residual tolerance, relative to the operator norm
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lowest eigenvalues, optionally over a sweep
    Spectrum {
        #[arg(long, default_value_t = 5)]
        k: usize,
        /// PATH=start:stop:points, e.g. param:fz=0.49:0.51:21
        #[arg(long)]
        sweep: Option<String>,
    },
    /// Effective Pauli coefficients
    Reduce {
        #[arg(long, value_enum)]
        method: Method,
        /// PATH=start:stop:points
        #[arg(long)]
        sweep: Option<String>,
        #[command(flatten)]
        opts: ReduceArgs,
    },
    /// Eigenvalues against a truncation schedule
    Converge {
        /// one row of per-mode cutoffs per line
        #[arg(long)]
        schedule: PathBuf,
        #[arg(long, default_value_t = 5)]
        k: usize,
        /// relative agreement required with the final row
        #[arg(long, default_value_t = 1e-6)]
        rel_tol: f64,
    },
    /// Several reduction methods side by side
    Compare {
        #[arg(long, value_enum, value_delimiter = ',')]
        methods: Vec<Method>,
        /// PATH=start:stop:points
        #[arg(long)]
        sweep: Option<String>,
        #[command(flatten)]
        opts: ReduceArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Lr,
    Pr,
    Instanton,
    Swt,
    Rot,
    Diag,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Lr => "lr",
            Method::Pr => "pr",
            Method::Instanton => "instanton",
            Method::Swt => "swt",
            Method::Rot => "rot",
            Method::Diag => "diag",
        }
    }

    fn multi(self) -> bool {
        matches!(self, Method::Swt | Method::Rot | Method::Diag)
    }
}

#[derive(Debug, Clone, clap::Args)]
pub struct ReduceArgs {
    /// value of the sweep parameter at which the perturbative basis is built
    /// (default: the netlist as written)
    #[arg(long)]
    pub pr_point: Option<f64>,
    /// allowed deviation of the charge difference from 2e (fraction)
    #[arg(long, default_value_t = 0.01)]
    pub charge_tol: f64,
    /// approximate rotation: allowed |column norm - 1|
    #[arg(long, default_value_t = 0.1)]
    pub normality_tol: f64,
    /// approximate rotation: fail on normality violations instead of warning
    #[arg(long)]
    pub strict: bool,
    /// diagonal method: expectation threshold as a fraction of |o0 - midpoint|
    #[arg(long, default_value_t = SIGN_THRESHOLD)]
    pub sign_threshold: f64,
    /// cap on the projected composite dimension
    #[arg(long, default_value_t = DEFAULT_DIM_CAP)]
    pub dim_cap: usize,
}

impl Default for ReduceArgs {
    fn default() -> Self {
        ReduceArgs {
            pr_point: None,
            charge_tol: 0.01,
            normality_tol: 0.1,
            strict: false,
            sign_threshold: SIGN_THRESHOLD,
            dim_cap: DEFAULT_DIM_CAP,
        }
    }
}

/// A parsed `PATH=start:stop:points` sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub path: String,
    pub values: Vec<f64>,
}

impl SweepPlan {
    pub fn parse(text: &str) -> Result<Self> {
        let bad = || Error::Usage(format!("sweep '{text}' must look like PATH=start:stop:points"));
        let (path, range) = text.split_once('=').ok_or_else(bad)?;
        let parts: Vec<&str> = range.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let start: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let stop: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let points: usize = parts[2].trim().parse().map_err(|_| bad())?;
        if points == 0 {
            return Err(Error::Usage("a sweep needs at least one point".into()));
        }
        let values = if points == 1 {
            vec![start]
        } else {
            (0..points)
                .map(|i| start + (stop - start) * i as f64 / (points - 1) as f64)
                .collect()
        };
        Ok(SweepPlan {
            path: path.trim().to_string(),
            values,
        })
    }
}

/// One reduction at one point: coefficient map plus extra report columns.
#[derive(Debug, Clone)]
pub struct ReductionRow {
    pub coeffs: BTreeMap<String, f64>,
    pub pauli: Option<PauliHamiltonian>,
    pub spectrum: Vec<f64>,
    pub extra: Vec<(String, String)>,
}

fn single_row(p: &PauliCoefficients1Q, extra: Vec<(String, String)>) -> ReductionRow {
    let coeffs = BTreeMap::from([
        ("I".to_string(), p.h_i),
        ("x".to_string(), p.h_x),
        ("y".to_string(), p.h_y),
        ("z".to_string(), p.h_z),
    ]);
    ReductionRow {
        coeffs,
        pauli: None,
        spectrum: p.eigenvalues().to_vec(),
        extra,
    }
}

fn multi_row(p: PauliHamiltonian, extra: Vec<(String, String)>) -> ReductionRow {
    let (w, _) = eigh(&pauli_reconstruct(&p));
    let coeffs = (0..p.coeffs.len()).map(|i| (p.label(i), p.coeffs[i])).collect();
    ReductionRow {
        coeffs,
        pauli: Some(p),
        spectrum: w,
        extra,
    }
}

/// Shared reduction context: solver options and the perturbative basis.
pub struct Reducer {
    pub solver: SolverOptions,
    pub args: ReduceArgs,
    pr_basis: Option<PerturbativeBasis>,
}

impl Reducer {
    pub fn new(
        base: &Netlist,
        sweep: Option<&SweepPlan>,
        methods: &[Method],
        solver: SolverOptions,
        args: ReduceArgs,
    ) -> Result<Self> {
        let multi = matches!(base, Netlist::Coupled(_));
        for m in methods {
            if m.multi() != multi {
                return Err(Error::Usage(format!(
                    "method '{}' needs a {} netlist",
                    m.name(),
                    if m.multi() { "coupled-system" } else { "single-circuit" }
                )));
            }
        }
        let pr_basis = if methods.contains(&Method::Pr) {
            let mut net = base.clone();
            if let (Some(v), Some(s)) = (args.pr_point, sweep) {
                net.set(&s.path, v)?;
                net.validate()?;
            }
            let m = CircuitModel::new(&net.single()?)?;
            let (_, o) = m.observable()?;
            Some(perturbative_basis(&m.hamiltonian, &o, &solver)?)
        } else {
            None
        };
        Ok(Reducer { solver, args, pr_basis })
    }

    fn local(&self) -> LocalOptions {
        LocalOptions {
            charge_tol: self.args.charge_tol,
        }
    }

    pub fn reduce_single(&self, spec: &CircuitSpec, method: Method) -> Result<ReductionRow> {
        match method {
            Method::Lr => {
                let m = CircuitModel::new(spec)?;
                let (kind, o) = m.observable()?;
                let (p, b, _) = local_reduction(&m.hamiltonian, &o, kind, &self.solver, &self.local())?;
                Ok(single_row(
                    &p,
                    vec![
                        ("o0".into(), fmt_e12(b.o0)),
                        ("o1".into(), fmt_e12(b.o1)),
                        ("theta".into(), fmt_e12(b.theta)),
                    ],
                ))
            }
            Method::Pr => {
                let m = CircuitModel::new(spec)?;
                let basis = self
                    .pr_basis
                    .as_ref()
                    .ok_or_else(|| Error::Usage("perturbative basis missing".into()))?;
                if basis.e0.len() != m.dim() {
                    return Err(Error::Usage(
                        "the sweep changes the basis size; the perturbative basis does not apply".into(),
                    ));
                }
                let p = perturbative_reduction(basis, &m.hamiltonian);
                Ok(single_row(&p, vec![("ip".into(), fmt_e12(basis.ip))]))
            }
            Method::Instanton => {
                let (p, d) = instanton_reduction(&InstantonParams::from_spec(spec)?)?;
                Ok(single_row(
                    &p,
                    vec![
                        ("delta".into(), fmt_e12(d.delta)),
                        ("s_l".into(), fmt_e12(d.actions[0])),
                        ("s_r".into(), fmt_e12(d.actions[1])),
                        ("asymmetry".into(), fmt_e12(d.asymmetry)),
                    ],
                ))
            }
            _ => Err(Error::Usage(format!(
                "method '{}' needs a coupled-system netlist",
                method.name()
            ))),
        }
    }

    pub fn reduce_multi(&self, net: &Netlist, method: Method) -> Result<ReductionRow> {
        let spec = match net {
            Netlist::Coupled(s) => s,
            Netlist::Single(_) => {
                return Err(Error::Usage(format!(
                    "method '{}' needs a coupled-system netlist",
                    method.name()
                )))
            }
        };
        let cm = CoupledModel::new(spec)?;
        let solved = cm.solve_circuits(&self.solver)?;
        let reg = QubitRegister::new(&solved, &self.local(), self.args.dim_cap)?;
        let h = cm.composite(&solved)?;
        let s = 1usize << reg.n_qubits();
        let eig = lowest_eigenpairs(&h, s, &self.solver)?;
        match method {
            Method::Swt | Method::Rot => {
                let (r, extra) = if method == Method::Swt {
                    let r = schrieffer_wolff_reduction(&h, &reg, &eig)?;
                    let d = &r.diagnostics;
                    let extra = vec![
                        ("unitarity".into(), fmt_e12(d.unitarity.unwrap_or(f64::NAN))),
                        ("conjugation".into(), fmt_e12(d.conjugation.unwrap_or(f64::NAN))),
                    ];
                    (r, extra)
                } else {
                    let opts = RotationOptions {
                        normality_tol: self.args.normality_tol,
                        strict: self.args.strict,
                    };
                    let (r, norms) = approximate_rotation_reduction(&h, &reg, &eig, &opts)?;
                    let worst = norms.iter().fold(0.0f64, |a, n| a.max((n - 1.0).abs()));
                    (r, vec![("normality".into(), fmt_e12(worst))])
                };
                let d = &r.diagnostics;
                let mut cols = vec![
                    ("gap".into(), fmt_e12(d.gap)),
                    ("interaction_norm".into(), fmt_e12(d.interaction_norm)),
                    ("projector_distance".into(), fmt_e12(d.projector_distance)),
                    ("interaction_small".into(), d.interaction_small().to_string()),
                    ("gap_lines_pass".into(), d.gap_lines.iter().all(|l| l.pass).to_string()),
                    ("spectrum_error".into(), fmt_e12(r.spectrum_error())),
                ];
                cols.extend(extra);
                Ok(multi_row(r.hamiltonian, cols))
            }
            Method::Diag => {
                let p = diagonal_reduction(&eig, &reg, self.args.sign_threshold)?;
                Ok(multi_row(p, vec![]))
            }
            _ => Err(Error::Usage(format!(
                "method '{}' needs a single-circuit netlist",
                method.name()
            ))),
        }
    }

    pub fn reduce(&self, net: &Netlist, method: Method) -> Result<ReductionRow> {
        match net {
            Netlist::Single(s) => self.reduce_single(s, method),
            Netlist::Coupled(_) => self.reduce_multi(net, method),
        }
    }
}

/// Netlist at every sweep point (or the netlist itself without a sweep).
pub fn sweep_points(base: &Netlist, sweep: Option<&SweepPlan>) -> Result<Vec<(Option<f64>, Netlist)>> {
    match sweep {
        None => Ok(vec![(None, base.clone())]),
        Some(s) => s
            .values
            .iter()
            .map(|&v| {
                let mut n = base.clone();
                n.set(&s.path, v)?;
                n.validate()?;
                Ok((Some(v), n))
            })
            .collect(),
    }
}

/// Per-qubit pi-rotation choices keeping multi-qubit coefficients continuous
/// along a sweep; failed points are skipped.
pub fn align_sweep(rows: &mut [Result<ReductionRow>]) {
    let mut prev: Option<PauliHamiltonian> = None;
    for r in rows.iter_mut().flatten() {
        if let Some(p) = r.pauli.clone() {
            let p = match &prev {
                Some(q) if q.n == p.n => align_signs(q, &p),
                _ => p,
            };
            *r = multi_row(p.clone(), std::mem::take(&mut r.extra));
            prev = Some(p);
        }
    }
}

fn provenance(netlist_text: &[u8], argv: &[String]) -> String {
    let hash = Sha256::digest(netlist_text);
    let hex: String = hash.iter().map(|b| format!("{b:02x}")).collect();
    format!(
        "# screduce {} netlist_sha256={hex} flags={}\n",
        env!("CARGO_PKG_VERSION"),
        argv.join(" ")
    )
}

fn status_cell(e: &Error) -> String {
    format!("error{}: {}", e.exit_code(), e).replace([',', '\n'], ";")
}

fn first_error<T>(rows: &[Result<T>]) -> Option<&Error> {
    rows.iter().find_map(|r| r.as_ref().err())
}

fn x_cell(x: Option<f64>) -> Vec<String> {
    x.map(|v| vec![fmt_e12(v)]).unwrap_or_default()
}

fn run_spectrum(
    net: &Netlist,
    sweep: Option<&SweepPlan>,
    k: usize,
    solver: &SolverOptions,
) -> Result<(String, Option<Error>)> {
    let points = sweep_points(net, sweep)?;
    let rows: Vec<Result<Vec<f64>>> = points
        .par_iter()
        .map(|(_, n)| -> Result<Vec<f64>> {
            match n {
                Netlist::Single(s) => Ok(CircuitModel::new(s)?.solve(k, solver)?.values),
                Netlist::Coupled(s) => {
                    let cm = CoupledModel::new(s)?;
                    let solved = cm.solve_circuits(solver)?;
                    let h = cm.composite(&solved)?;
                    Ok(lowest_eigenpairs(&h, k, solver)?.values)
                }
            }
        })
        .collect();
    let mut out = String::new();
    let mut head: Vec<String> = sweep.map(|s| vec![s.path.clone()]).unwrap_or_default();
    head.push("status".into());
    head.extend((0..k).map(|i| format!("E{i}")));
    head.extend((1..k).map(|i| format!("E{i}-E0")));
    let _ = writeln!(out, "{}", head.join(","));
    for ((x, _), r) in points.iter().zip(&rows) {
        let mut cells = x_cell(*x);
        match r {
            Ok(e) => {
                cells.push("ok".into());
                cells.extend(e.iter().map(|&v| fmt_e12(v)));
                cells.extend(e.iter().skip(1).map(|&v| fmt_e12(v - e[0])));
            }
            Err(err) => cells.push(status_cell(err)),
        }
        let _ = writeln!(out, "{}", cells.join(","));
    }
    Ok((out, first_error(&rows).cloned()))
}

fn reduction_table(
    points: &[(Option<f64>, Netlist)],
    sweep: Option<&SweepPlan>,
    methods: &[Method],
    results: &[Vec<Result<ReductionRow>>],
) -> String {
    // column sets per method from the first successful row
    let mut out = String::new();
    let mut head: Vec<String> = sweep.map(|s| vec![s.path.clone()]).unwrap_or_default();
    let mut layouts = Vec::new();
    for (mi, m) in methods.iter().enumerate() {
        let first = results[mi].iter().find_map(|r| r.as_ref().ok());
        let labels: Vec<String> = first.map(|r| r.coeffs.keys().cloned().collect()).unwrap_or_default();
        let extras: Vec<String> = first
            .map(|r| r.extra.iter().map(|e| e.0.clone()).collect())
            .unwrap_or_default();
        let nspec = first.map_or(0, |r| r.spectrum.len());
        let p = if methods.len() > 1 {
            format!("{}_", m.name())
        } else {
            String::new()
        };
        head.push(format!("{p}status"));
        head.extend(labels.iter().map(|l| format!("{p}h_{l}")));
        head.extend((0..nspec).map(|i| format!("{p}E{i}")));
        head.extend(extras.iter().map(|e| format!("{p}{e}")));
        layouts.push((labels, nspec, extras.len()));
    }
    let _ = writeln!(out, "{}", head.join(","));
    for (pi, (x, _)) in points.iter().enumerate() {
        let mut cells = x_cell(*x);
        for (mi, (labels, nspec, nextra)) in layouts.iter().enumerate() {
            match &results[mi][pi] {
                Ok(r) => {
                    cells.push("ok".into());
                    cells.extend(
                        labels
                            .iter()
                            .map(|l| fmt_e12(r.coeffs.get(l).cloned().unwrap_or(f64::NAN))),
                    );
                    cells.extend((0..*nspec).map(|i| fmt_e12(r.spectrum.get(i).cloned().unwrap_or(f64::NAN))));
                    cells.extend(r.extra.iter().map(|e| e.1.clone()));
                }
                Err(e) => {
                    cells.push(status_cell(e));
                    cells.extend(std::iter::repeat_n(String::new(), labels.len() + nspec + nextra));
                }
            }
        }
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

/// Least-squares slope of y(x).
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Second finite differences y[i-1] - 2 y[i] + y[i+1].
pub fn second_differences(y: &[f64]) -> Vec<f64> {
    y.windows(3).map(|w| w[0] - 2.0 * w[1] + w[2]).collect()
}

/// Largest relative spread max|y - mean| / |mean|.
pub fn relative_spread(y: &[f64]) -> f64 {
    let m = y.iter().sum::<f64>() / y.len() as f64;
    y.iter().map(|v| (v - m).abs()).fold(0.0, f64::max) / m.abs()
}

fn compare_summary(sweep: Option<&SweepPlan>, methods: &[Method], results: &[Vec<Result<ReductionRow>>]) -> String {
    let mut out = String::new();
    let reference = methods[0];
    let ok = |mi: usize| results[mi].iter().all(|r| r.is_ok());
    for mi in 1..methods.len() {
        if !ok(0) || !ok(mi) {
            let _ = writeln!(
                out,
                "# {} vs {}: failed points, no summary",
                methods[mi].name(),
                reference.name()
            );
            continue;
        }
        let labels: Vec<String> = results[0][0]
            .as_ref()
            .map(|r| r.coeffs.keys().cloned().collect())
            .unwrap_or_default();
        for l in labels {
            // deviation relative to the largest reference magnitude along the sweep
            let pairs: Vec<(f64, f64)> = results[0]
                .iter()
                .zip(&results[mi])
                .map(|(a, b)| {
                    (
                        a.as_ref().unwrap().coeffs[&l],
                        b.as_ref().unwrap().coeffs.get(&l).cloned().unwrap_or(0.0),
                    )
                })
                .collect();
            let scale = pairs.iter().map(|p| p.0.abs()).fold(0.0, f64::max);
            let dev = if scale > 0.0 {
                pairs.iter().map(|p| (p.0 - p.1).abs()).fold(0.0, f64::max) / scale
            } else {
                0.0
            };
            let _ = writeln!(
                out,
                "# max relative deviation {} vs {} h_{l}: {}",
                methods[mi].name(),
                reference.name(),
                fmt_e12(dev)
            );
        }
    }
    // single-qubit sweep shape: h_z slope, h_x curvature and flatness
    if let Some(s) = sweep {
        if s.values.len() >= 3 && methods.iter().all(|m| !m.multi()) {
            for (mi, m) in methods.iter().enumerate() {
                if !ok(mi) {
                    continue;
                }
                let hz: Vec<f64> = results[mi].iter().map(|r| r.as_ref().unwrap().coeffs["z"]).collect();
                let hx: Vec<f64> = results[mi].iter().map(|r| r.as_ref().unwrap().coeffs["x"]).collect();
                let d2 = second_differences(&hx);
                let _ = writeln!(
                    out,
                    "# {}: h_z slope {} h_x max second difference {} h_x relative spread {}",
                    m.name(),
                    fmt_e12(fit_slope(&s.values, &hz)),
                    fmt_e12(d2.iter().cloned().fold(f64::NEG_INFINITY, f64::max)),
                    fmt_e12(relative_spread(&hx))
                );
            }
        }
    }
    out
}

/// Run reductions for every method at every point, in parallel over points.
pub fn run_reductions(
    net: &Netlist,
    sweep: Option<&SweepPlan>,
    methods: &[Method],
    solver: &SolverOptions,
    args: &ReduceArgs,
) -> Result<(Vec<(Option<f64>, Netlist)>, Vec<Vec<Result<ReductionRow>>>)> {
    let reducer = Reducer::new(net, sweep, methods, *solver, args.clone())?;
    let points = sweep_points(net, sweep)?;
    let mut results = Vec::new();
    for &m in methods {
        let mut rows: Vec<Result<ReductionRow>> = points.par_iter().map(|(_, n)| reducer.reduce(n, m)).collect();
        if m.multi() {
            align_sweep(&mut rows);
        }
        results.push(rows);
    }
    Ok((points, results))
}

fn execute(cli: &Cli, argv: &[String]) -> Result<(String, Option<Error>)> {
    let solver = SolverOptions {
        tol: cli.tol,
        seed: cli.seed,
        ..SolverOptions::default()
    };
    let (header, body, failure) = match &cli.command {
        Command::Converge { schedule, k, rel_tol } => {
            let path = cli
                .netlist
                .as_ref()
                .ok_or_else(|| Error::Usage("--netlist is required".into()))?;
            let text = std::fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            let spec = load_netlist(path)?.single()?;
            let sched_text =
                std::fs::read_to_string(schedule).map_err(|e| Error::Io(format!("{}: {e}", schedule.display())))?;
            let rows = parse_schedule(&sched_text)?;
            let table = convergence_study(&spec, &rows, *k, *rel_tol, &solver)?;
            let failure = table
                .rows
                .iter()
                .find_map(|r| r.values.as_ref().err())
                .map(|m| Error::Numeric(m.clone()));
            (provenance(&text, argv), table.to_csv(), failure)
        }
        other => {
            let path = cli
                .netlist
                .as_ref()
                .ok_or_else(|| Error::Usage("--netlist is required".into()))?;
            let text = std::fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            let net = load_netlist(path)?;
            match other {
                Command::Spectrum { k, sweep } => {
                    let plan = sweep.as_deref().map(SweepPlan::parse).transpose()?;
                    let (body, err) = run_spectrum(&net, plan.as_ref(), *k, &solver)?;
                    (provenance(&text, argv), body, err)
                }
                Command::Reduce { method, sweep, opts } => {
                    let plan = sweep.as_deref().map(SweepPlan::parse).transpose()?;
                    let methods = [*method];
                    let (points, results) = run_reductions(&net, plan.as_ref(), &methods, &solver, opts)?;
                    let body = reduction_table(&points, plan.as_ref(), &methods, &results);
                    let err = first_error(&results[0]).cloned();
                    (provenance(&text, argv), body, err)
                }
                Command::Compare { methods, sweep, opts } => {
                    if methods.len() < 2 {
                        return Err(Error::Usage("compare needs at least two methods".into()));
                    }
                    let plan = sweep.as_deref().map(SweepPlan::parse).transpose()?;
                    let (points, results) = run_reductions(&net, plan.as_ref(), methods, &solver, opts)?;
                    let mut body = reduction_table(&points, plan.as_ref(), methods, &results);
                    body.push_str(&compare_summary(plan.as_ref(), methods, &results));
                    let err = results.iter().find_map(|r| first_error(r)).cloned();
                    (provenance(&text, argv), body, err)
                }
                Command::Converge { .. } => unreachable!(),
            }
        }
    };
    Ok((format!("{header}{body}"), failure))
}

/// Truncation rows: integers separated by commas or whitespace, `#` comments.
pub fn parse_schedule(text: &str) -> Result<Vec<Vec<usize>>> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.split(|ch: char| ch == ',' || ch.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| {
                    t.parse::<usize>()
                        .map_err(|_| Error::Parse(format!("bad truncation '{t}' in schedule")))
                })
                .collect()
        })
        .collect()
}

/// Parse arguments, run, write output; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let flags: Vec<String> = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers.unwrap_or(0))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start workers: {e}");
            return 2;
        }
    };
    let outcome = pool.install(|| execute(&cli, &flags));
    match outcome {
        Ok((text, failure)) => {
            let written = match &cli.out {
                Some(p) => std::fs::write(p, &text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
                None => {
                    print!("{text}");
                    Ok(())
                }
            };
            if let Err(e) = written {
                eprintln!("error: {e}");
                return e.exit_code();
            }
            match failure {
                Some(e) => {
                    eprintln!("error: {e}");
                    e.exit_code()
                }
                None => 0,
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_parsing() {
        let s = SweepPlan::parse("param:fz=0.49:0.51:3").unwrap();
        assert_eq!(s.path, "param:fz");
        assert_eq!(s.values.len(), 3);
        assert!((s.values[1] - 0.5).abs() < 1e-15);
        assert_eq!(SweepPlan::parse("param:fz=0.5:0.6:1").unwrap().values, vec![0.5]);
        assert!(SweepPlan::parse("param:fz=0.5:0.6:0").is_err());
        assert!(SweepPlan::parse("param:fz").is_err());
    }

    #[test]
    fn schedule_parsing() {
        let s = parse_schedule("# nmax, q2, q3\n3,5,5\n9 10 10\n").unwrap();
        assert_eq!(s, vec![vec![3, 5, 5], vec![9, 10, 10]]);
        assert!(parse_schedule("3,x").is_err());
    }

    #[test]
    fn shape_helpers() {
        let x = [0.0, 1.0, 2.0, 3.0];
        assert!((fit_slope(&x, &[1.0, 3.0, 5.0, 7.0]) - 2.0).abs() < 1e-14);
        assert_eq!(second_differences(&[0.0, 1.0, 4.0, 9.0]), vec![2.0, 2.0]);
        assert!(relative_spread(&[2.0, 2.0]) == 0.0);
    }
}
