//! JSON netlist format.
//!
//! A single circuit:
//!
//! ```json
//! {
//!   "name": "rf_squid",
//!   "params": {"fz": "0.5 Phi0"},
//!   "nodes": [1],
//!   "branches": [
//!     {"id": "L", "nodes": [1, 0], "type": "inductor", "value": "2.5 nH"},
//!     {"id": "J", "nodes": [1, 0], "type": "junction", "ej": "125 GHz", "cap": "5 fF"}
//!   ],
//!   "tree": ["L"],
//!   "fluxes": {"J": "fz"},
//!   "modes": {"bases": [{"kind": "ho", "nmax": 40}]},
//!   "observable": {"kind": "current", "branch": "L"}
//! }
//! ```
//!
//! A coupled system lists circuits (each with `role` and `keep`) and couplings:
//!
//! ```json
//! {
//!   "name": "pair",
//!   "params": {"fz": "1e-4 Phi0"},
//!   "circuits": [{"name": "q1", "role": "qubit", "keep": 10, "...": "..."}],
//!   "couplings": [
//!     {"id": "M12", "type": "mutual", "a": "q1.L", "b": "q2.L", "value": "2 pH"},
//!     {"id": "C12", "type": "capacitor", "a": "q1.1", "b": "q2.1", "value": "132 fF"}
//!   ]
//! }
//! ```
//!
//! Ground is node 0. Every value carries a unit. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use serde::Deserialize;

use super::{
    BasisSpec, Branch, CapacitiveCoupling, CircuitSpec, CoupledSystemSpec, CurrentBias, Element, LinExpr,
    MutualCoupling, ObservableSpec, Role, SubCircuit, VoltageBias,
};
use crate::units::{parse_quantity, Dim};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Netlist {
    Single(CircuitSpec),
    Coupled(CoupledSystemSpec),
}

impl Netlist {
    pub fn name(&self) -> &str {
        match self {
            Netlist::Single(s) => &s.name,
            Netlist::Coupled(s) => &s.name,
        }
    }

    pub fn single(self) -> Result<CircuitSpec> {
        match self {
            Netlist::Single(s) => Ok(s),
            Netlist::Coupled(_) => Err(Error::Usage("expected a single-circuit netlist".into())),
        }
    }

    pub fn coupled(self) -> Result<CoupledSystemSpec> {
        match self {
            Netlist::Coupled(s) => Ok(s),
            Netlist::Single(_) => Err(Error::Usage("expected a coupled-system netlist".into())),
        }
    }

    /// Set a sweepable quantity. Paths:
    /// `param:NAME` (Phi0), `value:[CIRCUIT.]BRANCH` (fF, pH or GHz),
    /// `coupling:ID` (pH or fF), `flux:[CIRCUIT.]BRANCH` (Phi0).
    pub fn set(&mut self, path: &str, value: f64) -> Result<()> {
        let (kind, target) = path
            .split_once(':')
            .ok_or_else(|| Error::Usage(format!("sweep path '{path}' must look like kind:target")))?;
        match (kind, self) {
            ("param", Netlist::Single(s)) => set_param(s, target, value, true),
            ("param", Netlist::Coupled(sys)) => {
                let mut hit = false;
                for sc in &mut sys.circuits {
                    hit |= set_param(&mut sc.spec, target, value, false).is_ok();
                }
                if hit {
                    Ok(())
                } else {
                    Err(Error::Usage(format!("unknown parameter '{target}'")))
                }
            }
            ("value", net) | ("flux", net) => {
                let spec = circuit_target(net, target)?;
                let (spec, bid) = spec;
                let k = spec
                    .branch_index(bid)
                    .ok_or_else(|| Error::Usage(format!("unknown branch '{bid}' in sweep path '{path}'")))?;
                if kind == "flux" {
                    spec.fluxes.insert(k, LinExpr::constant(value));
                } else {
                    match &mut spec.branches[k].element {
                        Element::Capacitor { c } => *c = value,
                        Element::Inductor { l } => *l = value,
                        Element::Junction { ej, .. } => *ej = value,
                    }
                }
                Ok(())
            }
            ("coupling", Netlist::Coupled(sys)) => {
                if let Some(m) = sys.mutuals.iter_mut().find(|m| m.id == target) {
                    m.m = value;
                    return Ok(());
                }
                if let Some(c) = sys.capacitors.iter_mut().find(|c| c.id == target) {
                    c.c = value;
                    return Ok(());
                }
                Err(Error::Usage(format!("unknown coupling '{target}'")))
            }
            _ => Err(Error::Usage(format!(
                "sweep path '{path}' does not apply to this netlist"
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Netlist::Single(s) => s.validate(),
            Netlist::Coupled(s) => s.validate(),
        }
    }
}

fn set_param(spec: &mut CircuitSpec, name: &str, value: f64, strict: bool) -> Result<()> {
    match spec.params.get_mut(name) {
        Some(v) => {
            *v = value;
            Ok(())
        }
        None if strict => Err(Error::Usage(format!("unknown parameter '{name}'"))),
        None => Err(Error::Usage(String::new())),
    }
}

fn circuit_target<'a>(net: &'a mut Netlist, target: &'a str) -> Result<(&'a mut CircuitSpec, &'a str)> {
    match net {
        Netlist::Single(s) => Ok((s, target)),
        Netlist::Coupled(sys) => {
            let (c, b) = target
                .split_once('.')
                .ok_or_else(|| Error::Usage(format!("'{target}' must be CIRCUIT.BRANCH")))?;
            let sc = sys
                .circuits
                .iter_mut()
                .find(|sc| sc.spec.name == c)
                .ok_or_else(|| Error::Usage(format!("unknown circuit '{c}'")))?;
            Ok((&mut sc.spec, b))
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CircuitJson {
    name: String,
    #[serde(default)]
    params: BTreeMap<String, String>,
    nodes: Vec<i64>,
    branches: Vec<BranchJson>,
    #[serde(default)]
    tree: Option<Vec<String>>,
    #[serde(default)]
    fluxes: BTreeMap<String, String>,
    #[serde(default)]
    biases: Option<BiasesJson>,
    modes: ModesJson,
    #[serde(default)]
    observable: Option<ObservableJson>,
    #[serde(default)]
    role: Option<String>,
    #[serde(default)]
    keep: Option<usize>,
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum BranchJson {
    Capacitor {
        id: String,
        nodes: [i64; 2],
        value: String,
    },
    Inductor {
        id: String,
        nodes: [i64; 2],
        value: String,
    },
    Junction {
        id: String,
        nodes: [i64; 2],
        ej: String,
        cap: Option<String>,
        fx: Option<String>,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BiasesJson {
    current: Option<CurrentJson>,
    voltage: Option<VoltageJson>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CurrentJson {
    node: i64,
    inductance: String,
    current: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct VoltageJson {
    node: i64,
    cg: String,
    vg: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModesJson {
    #[serde(default)]
    transform: Option<Vec<Vec<f64>>>,
    bases: Vec<BasisJson>,
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum BasisJson {
    Ho { nmax: usize, impedance: Option<String> },
    Charge { cutoff: usize, offset: Option<f64> },
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum ObservableJson {
    Current {
        branch: String,
    },
    /// 1-based mode index
    Charge {
        mode: usize,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CoupledJson {
    name: String,
    #[serde(default)]
    params: BTreeMap<String, String>,
    circuits: Vec<CircuitJson>,
    #[serde(default)]
    couplings: Vec<CouplingJson>,
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum CouplingJson {
    Mutual {
        id: String,
        a: String,
        b: String,
        value: String,
    },
    Capacitor {
        id: String,
        a: String,
        b: String,
        value: String,
    },
}

fn json_err(e: serde_json::Error) -> Error {
    Error::Parse(e.to_string())
}

pub fn load_netlist(path: impl AsRef<Path>) -> Result<Netlist> {
    let text = std::fs::read_to_string(path.as_ref())
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.as_ref().display())))?;
    parse_netlist(&text)
}

/// Parse and eagerly validate a netlist.
pub fn parse_netlist(text: &str) -> Result<Netlist> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(json_err)?;
    let net = if value.get("circuits").is_some() {
        let cj: CoupledJson = serde_json::from_value(value).map_err(json_err)?;
        Netlist::Coupled(convert_coupled(cj)?)
    } else {
        let c: CircuitJson = serde_json::from_value(value).map_err(json_err)?;
        if c.role.is_some() || c.keep.is_some() {
            return Err(Error::Netlist(
                "'role' and 'keep' belong to circuits of a coupled system".into(),
            ));
        }
        Netlist::Single(convert_circuit(c, &BTreeMap::new())?)
    };
    net.validate()?;
    Ok(net)
}

fn parse_params(raw: &BTreeMap<String, String>) -> Result<BTreeMap<String, f64>> {
    raw.iter()
        .map(|(k, v)| Ok((k.clone(), parse_quantity(v, Dim::Flux)?)))
        .collect()
}

fn convert_circuit(c: CircuitJson, global: &BTreeMap<String, f64>) -> Result<CircuitSpec> {
    let mut problems = Vec::new();
    let mut params = global.clone();
    for (k, v) in parse_params(&c.params)? {
        if params.insert(k.clone(), v).is_some() {
            problems.push(format!("parameter '{k}' defined twice"));
        }
    }
    let mut index = BTreeMap::new();
    for (i, &label) in c.nodes.iter().enumerate() {
        if label == 0 {
            problems.push("node 0 is ground and must not be listed".to_string());
        } else if index.insert(label, i + 1).is_some() {
            problems.push(format!("duplicate node {label}"));
        }
    }
    let node = |label: i64, problems: &mut Vec<String>, what: &str| -> usize {
        if label == 0 {
            return 0;
        }
        match index.get(&label) {
            Some(&k) => k,
            None => {
                problems.push(format!("{what} references unknown node {label}"));
                0
            }
        }
    };
    let mut branches = Vec::new();
    for b in c.branches {
        let (id, nodes, element) = match b {
            BranchJson::Capacitor { id, nodes, value } => {
                let c = parse_quantity(&value, Dim::Capacitance)?;
                (id, nodes, Element::Capacitor { c })
            }
            BranchJson::Inductor { id, nodes, value } => {
                let l = parse_quantity(&value, Dim::Inductance)?;
                (id, nodes, Element::Inductor { l })
            }
            BranchJson::Junction { id, nodes, ej, cap, fx } => {
                let ej = parse_quantity(&ej, Dim::Energy)?;
                let c = match cap {
                    Some(s) => parse_quantity(&s, Dim::Capacitance)?,
                    None => 0.0,
                };
                let fx = fx.map(|s| LinExpr::parse(&s)).transpose()?;
                (id, nodes, Element::Junction { ej, c, fx })
            }
        };
        let what = format!("branch '{id}'");
        let a = node(nodes[0], &mut problems, &what);
        let bb = node(nodes[1], &mut problems, &what);
        branches.push(Branch { id, a, b: bb, element });
    }
    let find = |id: &str, problems: &mut Vec<String>| -> Option<usize> {
        let k = branches.iter().position(|b| b.id == id);
        if k.is_none() {
            problems.push(format!("unknown branch '{id}'"));
        }
        k
    };
    let tree = c
        .tree
        .map(|ids| ids.iter().filter_map(|id| find(id, &mut problems)).collect());
    let mut fluxes = BTreeMap::new();
    for (id, expr) in &c.fluxes {
        if let Some(k) = find(id, &mut problems) {
            fluxes.insert(k, LinExpr::parse(expr)?);
        }
    }
    let (mut current_bias, mut voltage_bias) = (None, None);
    if let Some(bj) = c.biases {
        if let Some(cb) = bj.current {
            current_bias = Some(CurrentBias {
                node: node(cb.node, &mut problems, "current bias"),
                l: parse_quantity(&cb.inductance, Dim::Inductance)?,
                current: parse_quantity(&cb.current, Dim::Current)?,
            });
        }
        if let Some(vb) = bj.voltage {
            voltage_bias = Some(VoltageBias {
                node: node(vb.node, &mut problems, "voltage bias"),
                cg: parse_quantity(&vb.cg, Dim::Capacitance)?,
                vg: parse_quantity(&vb.vg, Dim::Voltage)?,
            });
        }
    }
    let n = c.nodes.len();
    let modes = match c.modes.transform {
        None => None,
        Some(rows) => {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                problems.push(format!("mode transform must be {n}x{n}"));
                None
            } else {
                Some(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
            }
        }
    };
    let mut bases = Vec::new();
    for b in c.modes.bases {
        bases.push(match b {
            BasisJson::Ho { nmax, impedance } => BasisSpec::Ho {
                nmax,
                impedance: impedance.map(|s| parse_quantity(&s, Dim::Resistance)).transpose()?,
            },
            BasisJson::Charge { cutoff, offset } => BasisSpec::Charge {
                cutoff,
                offset: offset.unwrap_or(0.0),
            },
        });
    }
    let observable = match c.observable {
        None => None,
        Some(ObservableJson::Current { branch }) => {
            find(&branch, &mut problems).map(|k| ObservableSpec::Current { branch: k })
        }
        Some(ObservableJson::Charge { mode }) => {
            if mode == 0 {
                problems.push("charge observable modes are numbered from 1".to_string());
                None
            } else {
                Some(ObservableSpec::Charge { mode: mode - 1 })
            }
        }
    };
    if !problems.is_empty() {
        return Err(Error::Netlist(format!("circuit '{}': {}", c.name, problems.join("; "))));
    }
    Ok(CircuitSpec {
        name: c.name,
        node_labels: c.nodes,
        branches,
        tree,
        fluxes,
        params,
        current_bias,
        voltage_bias,
        modes,
        bases,
        observable,
    })
}

fn convert_coupled(cj: CoupledJson) -> Result<CoupledSystemSpec> {
    let global = parse_params(&cj.params)?;
    let mut circuits = Vec::new();
    for c in cj.circuits {
        let role = match c.role.as_deref() {
            Some("qubit") => Role::Qubit,
            Some("coupler") => Role::Coupler,
            Some(r) => return Err(Error::Netlist(format!("circuit '{}': unknown role '{r}'", c.name))),
            None => return Err(Error::Netlist(format!("circuit '{}' needs a role", c.name))),
        };
        let keep = c
            .keep
            .ok_or_else(|| Error::Netlist(format!("circuit '{}' needs 'keep'", c.name)))?;
        circuits.push(SubCircuit {
            spec: convert_circuit(c, &global)?,
            role,
            keep,
        });
    }
    let circuit = |name: &str| -> Result<usize> {
        circuits
            .iter()
            .position(|c| c.spec.name == name)
            .ok_or_else(|| Error::Netlist(format!("unknown circuit '{name}'")))
    };
    let split = |s: &str| -> Result<(String, String)> {
        s.split_once('.')
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .ok_or_else(|| Error::Netlist(format!("coupling endpoint '{s}' must be CIRCUIT.ITEM")))
    };
    let mut mutuals = Vec::new();
    let mut capacitors = Vec::new();
    for cp in cj.couplings {
        match cp {
            CouplingJson::Mutual { id, a, b, value } => {
                let mut ends = Vec::new();
                for e in [&a, &b] {
                    let (c, br) = split(e)?;
                    let ci = circuit(&c)?;
                    let bi = circuits[ci]
                        .spec
                        .branch_index(&br)
                        .ok_or_else(|| Error::Netlist(format!("mutual '{id}': unknown branch '{e}'")))?;
                    ends.push((ci, bi));
                }
                mutuals.push(MutualCoupling {
                    id,
                    a: ends[0],
                    b: ends[1],
                    m: parse_quantity(&value, Dim::Inductance)?,
                });
            }
            CouplingJson::Capacitor { id, a, b, value } => {
                let mut ends = Vec::new();
                for e in [&a, &b] {
                    let (c, node) = split(e)?;
                    let ci = circuit(&c)?;
                    let label: i64 = node
                        .parse()
                        .map_err(|_| Error::Netlist(format!("capacitor '{id}': bad node '{e}'")))?;
                    let ni = circuits[ci]
                        .spec
                        .node_labels
                        .iter()
                        .position(|&l| l == label)
                        .ok_or_else(|| Error::Netlist(format!("capacitor '{id}': unknown node '{e}'")))?;
                    ends.push((ci, ni + 1));
                }
                capacitors.push(CapacitiveCoupling {
                    id,
                    a: ends[0],
                    b: ends[1],
                    c: parse_quantity(&value, Dim::Capacitance)?,
                });
            }
        }
    }
    Ok(CoupledSystemSpec {
        name: cj.name,
        circuits,
        mutuals,
        capacitors,
    })
}
