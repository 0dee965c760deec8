//! Physical constants and unit-suffixed quantity parsing.
//!
//! Internal units: energy in GHz (E/h), capacitance in fF, inductance in pH,
//! flux in units of the flux quantum, charge in units of 2e.

use crate::{Error, Result};

pub const PLANCK: f64 = 6.626_070_15e-34;
pub const E_CHARGE: f64 = 1.602_176_634e-19;
/// Superconducting flux quantum h/2e in Wb (2.0678338e-15).
pub const PHI0: f64 = PLANCK / (2.0 * E_CHARGE);

/// Charging scale: (2e)^2 / (2 * 1 fF) / h in GHz, so Q^2/2C = E_CC / C[fF] * n^2.
pub const E_CC: f64 = (2.0 * E_CHARGE) * (2.0 * E_CHARGE) / (2.0 * 1e-15 * PLANCK) / 1e9;

/// Inductive scale: PHI0^2 / (2 * 1 pH) / h in GHz, so Phi^2/2L = E_LL / L[pH] * phi^2.
pub const E_LL: f64 = PHI0 * PHI0 / (2.0 * 1e-12 * PLANCK) / 1e9;

/// Superconducting resistance quantum h / (2e)^2 in Ohm.
pub const R_Q: f64 = PLANCK / (4.0 * E_CHARGE * E_CHARGE);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dim {
    Capacitance,
    Inductance,
    Energy,
    Flux,
    Current,
    Voltage,
    Resistance,
}

impl Dim {
    fn base(self) -> &'static [&'static str] {
        match self {
            Dim::Capacitance => &["F"],
            Dim::Inductance => &["H"],
            Dim::Energy => &["Hz"],
            Dim::Flux => &["Phi0"],
            Dim::Current => &["A"],
            Dim::Voltage => &["V"],
            Dim::Resistance => &["Ohm"],
        }
    }

    /// Scale of the internal unit in SI (or in Phi0 for flux).
    fn internal_scale(self) -> f64 {
        match self {
            Dim::Capacitance => 1e-15,
            Dim::Inductance => 1e-12,
            Dim::Energy => 1e9,
            Dim::Flux | Dim::Current | Dim::Voltage | Dim::Resistance => 1.0,
        }
    }
}

fn prefix(p: &str) -> Option<f64> {
    Some(match p {
        "" => 1.0,
        "a" => 1e-18,
        "f" => 1e-15,
        "p" => 1e-12,
        "n" => 1e-9,
        "u" | "µ" | "μ" => 1e-6,
        "m" => 1e-3,
        "k" => 1e3,
        "M" => 1e6,
        "G" => 1e9,
        "T" => 1e12,
        _ => return None,
    })
}

/// Parse `"<number> <unit>"` (e.g. `"2.5 nH"`) into the internal unit of `dim`.
pub fn parse_quantity(text: &str, dim: Dim) -> Result<f64> {
    let s = text.trim();
    let split = s
        .find(|c: char| c.is_whitespace())
        .ok_or_else(|| Error::Parse(format!("quantity '{text}' lacks a unit suffix")))?;
    let (num, unit) = s.split_at(split);
    let unit = unit.trim();
    let value: f64 = num
        .parse()
        .map_err(|_| Error::Parse(format!("bad number in quantity '{text}'")))?;
    for base in dim.base() {
        if let Some(p) = unit.strip_suffix(base) {
            if dim == Dim::Flux && !p.is_empty() {
                break;
            }
            if let Some(scale) = prefix(p) {
                return Ok(value * scale / dim.internal_scale());
            }
        }
    }
    Err(Error::Parse(format!("unit '{unit}' in '{text}' is not a {dim:?} unit")))
}

/// C-style `%.12e` formatting, e.g. `1.234500000000e+00`.
pub fn fmt_e12(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{x:.12e}");
    let (mant, exp) = s.split_once('e').expect("exponent present");
    let e: i32 = exp.parse().expect("integer exponent");
    let sign = if e < 0 { '-' } else { '+' };
    format!("{mant}e{sign}{:02}", e.abs())
}
