use std::f64::consts::PI;

use super::quad::gauss_kronrod;
use super::PauliCoefficients1Q;
use crate::circuit::{CircuitSpec, Element};
use crate::units::{E_CC, E_LL};
use crate::{Error, Result};

/// rf-SQUID parameters for the semiclassical estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstantonParams {
    /// Josephson energy, GHz
    pub ej: f64,
    /// loop inductance, pH
    pub l: f64,
    /// total capacitance across the junction, fF
    pub c: f64,
    /// applied flux in Phi0 (phi_ext / 2 pi)
    pub f_ext: f64,
}

impl InstantonParams {
    /// Characteristic inductive energy (Phi0 / 2 pi)^2 / L in GHz.
    pub fn u_l(&self) -> f64 {
        2.0 * E_LL / (4.0 * PI * PI * self.l)
    }

    pub fn beta(&self) -> f64 {
        self.ej / self.u_l()
    }

    /// Build from U_L (GHz) and beta_L at fixed capacitance.
    pub fn from_screening(u_l: f64, beta: f64, c: f64, f_ext: f64) -> Self {
        let l = 2.0 * E_LL / (4.0 * PI * PI * u_l);
        InstantonParams {
            ej: beta * u_l,
            l,
            c,
            f_ext,
        }
    }

    /// Read a one-node rf-SQUID netlist: one inductor, one junction and any
    /// number of capacitors, all to ground.
    pub fn from_spec(spec: &CircuitSpec) -> Result<Self> {
        if spec.num_nodes() != 1 {
            return Err(Error::Usage(format!(
                "instanton method needs a one-node rf-SQUID, '{}' has {} nodes",
                spec.name,
                spec.num_nodes()
            )));
        }
        let (mut l, mut j, mut c) = (None, None, 0.0);
        for (k, b) in spec.branches.iter().enumerate() {
            match &b.element {
                Element::Inductor { l: v } if l.is_none() => l = Some(*v),
                Element::Junction { .. } if j.is_none() => j = Some(k),
                Element::Capacitor { .. } => {}
                _ => {
                    return Err(Error::Usage(
                        "instanton method needs exactly one inductor and one junction".into(),
                    ))
                }
            }
            c += b.element.capacitance();
        }
        let (l, j) = match (l, j) {
            (Some(l), Some(j)) => (l, j),
            _ => {
                return Err(Error::Usage(
                    "instanton method needs exactly one inductor and one junction".into(),
                ))
            }
        };
        Ok(InstantonParams {
            ej: spec.josephson_energy(j)?,
            l,
            c,
            f_ext: spec.closure_flux(j)?,
        })
    }

    /// V(phi) in GHz, phi in radians.
    pub fn potential(&self, phi: f64) -> f64 {
        let d = phi - 2.0 * PI * self.f_ext;
        self.u_l() * (0.5 * d * d + self.beta() * (1.0 - phi.cos()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstantonDetails {
    /// phi_L, phi_M, phi_R
    pub stationary: [f64; 3],
    /// bound energies E_L, E_R (GHz)
    pub energies: [f64; 2],
    /// small-oscillation frequencies of the two wells (GHz)
    pub frequencies: [f64; 2],
    /// barrier top V(phi_M)
    pub barrier: f64,
    /// dimensionless actions S_L, S_R (in units of hbar)
    pub actions: [f64; 2],
    /// symmetric-well splittings Delta_L, Delta_R
    pub splittings: [f64; 2],
    pub asymmetry: f64,
    pub delta: f64,
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if b - a <= tol {
            return m;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Roots of beta sin(phi) = phi_ext - phi, in ascending order.
fn stationary_points(beta: f64, phi_ext: f64) -> Vec<f64> {
    let g = |x: f64| beta * x.sin() + x - phi_ext;
    // every root satisfies |phi - phi_ext| <= beta
    let (lo, hi) = (phi_ext - beta - 1.0, phi_ext + beta + 1.0);
    let steps = 20_000;
    let h = (hi - lo) / steps as f64;
    let mut roots = Vec::new();
    let mut x0 = lo;
    let mut g0 = g(x0);
    for i in 1..=steps {
        let x1 = lo + i as f64 * h;
        let g1 = g(x1);
        if g0 == 0.0 {
            roots.push(x0);
        } else if (g0 < 0.0) != (g1 < 0.0) {
            roots.push(bisect(g, x0, x1, 1e-13));
        }
        x0 = x1;
        g0 = g1;
    }
    roots
}

/// Semiclassical two-level model of an rf-SQUID in the persistent-current
/// basis {|R>, |L>}: h_x = -Delta, h_z = (E_R - E_L)/2, h_I = (E_R + E_L)/2.
pub fn instanton_reduction(p: &InstantonParams) -> Result<(PauliCoefficients1Q, InstantonDetails)> {
    let beta = p.beta();
    let phi_ext = 2.0 * PI * p.f_ext;
    let roots = stationary_points(beta, phi_ext);
    let vpp = |x: f64| p.u_l() * (1.0 + beta * x.cos());
    // the barrier is the maximum closest to the applied flux, flanked by two minima
    let maxima: Vec<usize> = (0..roots.len()).filter(|&i| vpp(roots[i]) < 0.0).collect();
    let im = maxima
        .iter()
        .cloned()
        .filter(|&i| i > 0 && i + 1 < roots.len())
        .min_by(|&a, &b| {
            (roots[a] - phi_ext)
                .abs()
                .partial_cmp(&(roots[b] - phi_ext).abs())
                .unwrap()
        })
        .ok_or_else(|| {
            Error::Validity(format!(
                "no double well: {} stationary points (beta_L = {beta:.4})",
                roots.len()
            ))
        })?;
    let (phi_l, phi_m, phi_r) = (roots[im - 1], roots[im], roots[im + 1]);
    let v0 = p.potential(phi_m);

    // hbar omega / h = sqrt((1 + beta cos phi) / LC) / 2 pi
    let lc = p.l * 1e-12 * p.c * 1e-15;
    let freq = |x: f64| ((1.0 + beta * x.cos()) / lc).sqrt() / (2.0 * PI) / 1e9;
    let (w_l, w_r) = (freq(phi_l), freq(phi_r));
    let e_l = p.potential(phi_l) + 0.5 * w_l;
    let e_r = p.potential(phi_r) + 0.5 * w_r;
    if e_l >= v0 || e_r >= v0 {
        return Err(Error::Validity(format!(
            "no bound tunneling regime: well energies ({e_l:.4}, {e_r:.4}) GHz reach the barrier top {v0:.4} GHz"
        )));
    }

    // S / hbar = (Phi0 / 2 pi hbar) int sqrt(2 C (V - E)) dphi = int sqrt((V - E) / E_C) dphi, E_C = (2e)^2 / 2C
    let ec = E_CC / p.c;
    let action = |e: f64, lo: f64, hi: f64| -> Result<f64> {
        // the symmetrized well is mirror symmetric about phi_M, so integrate one half twice
        let tp = bisect(|x| p.potential(x) - e, lo, hi, 1e-12);
        let (a, b) = if tp < phi_m { (tp, phi_m) } else { (phi_m, tp) };
        Ok(2.0 * gauss_kronrod(|x| ((p.potential(x) - e).max(0.0) / ec).sqrt(), a, b, 1e-10)?)
    };
    let s_l = action(e_l, phi_l, phi_m)?;
    let s_r = action(e_r, phi_m, phi_r)?;
    let d_l = w_l * (-s_l).exp();
    let d_r = w_r * (-s_r).exp();
    let q = ((v0 - e_l) / (v0 - e_r)).powf(0.25);
    let a = 0.5 * (q + 1.0 / q);
    let delta = a * (d_l * d_r).sqrt();
    let coeffs = PauliCoefficients1Q {
        h_i: 0.5 * (e_r + e_l),
        h_x: -delta,
        h_y: 0.0,
        h_z: 0.5 * (e_r - e_l),
    };
    let details = InstantonDetails {
        stationary: [phi_l, phi_m, phi_r],
        energies: [e_l, e_r],
        frequencies: [w_l, w_r],
        barrier: v0,
        actions: [s_l, s_r],
        splittings: [d_l, d_r],
        asymmetry: a,
        delta,
    };
    Ok((coeffs, details))
}
