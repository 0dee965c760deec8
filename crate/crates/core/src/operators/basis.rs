use std::f64::consts::PI;

use crate::circuit::BasisSpec;
use crate::linalg::{c, CMat, C64, I};
use crate::units::{E_CC, E_LL, R_Q};
use crate::{Error, Result};

/// Truncated basis of one mode.
#[derive(Debug, Clone, PartialEq)]
pub enum ModeBasis {
    /// Number states 0..=nmax with phi = width (a + a^dagger) / sqrt 2 (Phi0).
    HarmonicOscillator {
        nmax: usize,
        width: f64,
        frequency: f64,
        impedance: f64,
    },
    /// Charge states -cutoff..=cutoff (units of 2e) shifted by `offset`.
    Charge { cutoff: usize, offset: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Which {
    Flux,
    Charge,
    FluxSquared,
    ChargeSquared,
    /// exp(i 2 pi k phi)
    Exp(f64),
    /// cos(2 pi (k phi + offset))
    CosFlux(f64, f64),
}

impl ModeBasis {
    /// Basis for a mode with quadratic part E_CC*inv_c n^2 + E_LL*inv_l phi^2.
    pub fn from_spec(spec: &BasisSpec, inv_c: f64, inv_l: f64, mode: usize) -> Result<Self> {
        match *spec {
            BasisSpec::Charge { cutoff, offset } => Ok(ModeBasis::Charge { cutoff, offset }),
            BasisSpec::Ho { nmax, impedance } => {
                let a = E_CC * inv_c;
                let b = E_LL * inv_l;
                let width = match impedance {
                    Some(z) => (z / (2.0 * PI * R_Q)).sqrt(),
                    None if b > 0.0 && a > 0.0 => (a / (4.0 * PI * PI * b)).powf(0.25),
                    None => {
                        return Err(Error::Unsupported(format!(
                            "mode {} has no inductive term; use a charge basis or set an impedance",
                            mode + 1
                        )))
                    }
                };
                let frequency = a / (2.0 * PI * PI * width * width);
                let impedance = 2.0 * PI * R_Q * width * width;
                Ok(ModeBasis::HarmonicOscillator {
                    nmax,
                    width,
                    frequency,
                    impedance,
                })
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ModeBasis::HarmonicOscillator { nmax, .. } => nmax + 1,
            ModeBasis::Charge { cutoff, .. } => 2 * cutoff + 1,
        }
    }

    /// Dense single-mode operator.
    pub fn operator(&self, which: Which) -> Result<CMat> {
        match *self {
            ModeBasis::HarmonicOscillator { nmax, width, .. } => Ok(ho_operator(nmax, width, which)),
            ModeBasis::Charge { cutoff, offset } => charge_operator(cutoff, offset, which),
        }
    }
}

/// (position, momentum) quadratures of dimension d, x = (a + a^dagger)/sqrt 2.
fn quadratures(d: usize) -> (CMat, CMat) {
    let mut x = CMat::zeros(d, d);
    let mut p = CMat::zeros(d, d);
    for k in 1..d {
        let v = (k as f64 / 2.0).sqrt();
        x[(k - 1, k)] = c(v);
        x[(k, k - 1)] = c(v);
        p[(k - 1, k)] = -I * v;
        p[(k, k - 1)] = I * v;
    }
    (x, p)
}

fn ho_operator(nmax: usize, s: f64, which: Which) -> CMat {
    let d = nmax + 1;
    match which {
        Which::Flux => quadratures(d).0 * c(s),
        Which::Charge => quadratures(d).1 * c(1.0 / (2.0 * PI * s)),
        // squares are formed one state larger and then truncated
        Which::FluxSquared => {
            let x = quadratures(d + 1).0 * c(s);
            (&x * &x).view((0, 0), (d, d)).into_owned()
        }
        Which::ChargeSquared => {
            let p = quadratures(d + 1).1 * c(1.0 / (2.0 * PI * s));
            (&p * &p).view((0, 0), (d, d)).into_owned()
        }
        Which::Exp(k) => displacement(nmax, 2.0 * PI * k * s / 2f64.sqrt()),
        Which::CosFlux(k, off) => {
            let e = displacement(nmax, 2.0 * PI * k * s / 2f64.sqrt()) * C64::from_polar(1.0, 2.0 * PI * off);
            (&e + e.adjoint()) * c(0.5)
        }
    }
}

/// Matrix elements of exp(i beta (a + a^dagger)) in number states 0..=nmax,
/// the displacement operator with alpha = i beta.
pub fn displacement(nmax: usize, beta: f64) -> CMat {
    let d = nmax + 1;
    let x = beta * beta;
    let mut lnfact = vec![0.0; d];
    for k in 1..d {
        lnfact[k] = lnfact[k - 1] + (k as f64).ln();
    }
    let mut out = CMat::zeros(d, d);
    for lo in 0..d {
        for hi in lo..d {
            let k = hi - lo;
            let lag = laguerre(lo, k as f64, x);
            let mag = if beta == 0.0 {
                if k == 0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                (0.5 * (lnfact[lo] - lnfact[hi]) + k as f64 * beta.abs().ln() - 0.5 * x).exp()
            };
            // (i beta)^k
            let sign = if beta < 0.0 && k % 2 == 1 { -1.0 } else { 1.0 };
            let phase = match k % 4 {
                0 => c(1.0),
                1 => I,
                2 => c(-1.0),
                _ => -I,
            };
            let v = phase * (sign * mag * lag);
            out[(hi, lo)] = v;
            out[(lo, hi)] = v;
        }
    }
    out
}

/// Generalized Laguerre polynomial L_n^(k)(x) by upward recurrence.
pub fn laguerre(n: usize, k: f64, x: f64) -> f64 {
    let mut l0 = 1.0;
    if n == 0 {
        return l0;
    }
    let mut l1 = 1.0 + k - x;
    for j in 1..n {
        let jf = j as f64;
        let l2 = ((2.0 * jf + 1.0 + k - x) * l1 - (jf + k) * l0) / (jf + 1.0);
        l0 = l1;
        l1 = l2;
    }
    l1
}

fn charge_operator(cutoff: usize, offset: f64, which: Which) -> Result<CMat> {
    let d = 2 * cutoff + 1;
    let n = |i: usize| i as f64 - cutoff as f64 + offset;
    let shift = |k: f64| -> Result<CMat> {
        let mut m = CMat::zeros(d, d);
        if k == 1.0 {
            for i in 0..d - 1 {
                m[(i + 1, i)] = c(1.0);
            }
        } else if k == -1.0 {
            for i in 0..d - 1 {
                m[(i, i + 1)] = c(1.0);
            }
        } else if k == 0.0 {
            m = CMat::identity(d, d);
        } else {
            return Err(Error::Unsupported(format!(
                "cosine with flux prefactor {k} in a charge basis (only +-1 is representable)"
            )));
        }
        Ok(m)
    };
    match which {
        Which::Charge => Ok(CMat::from_diagonal(&nalgebra::DVector::from_fn(d, |i, _| c(n(i))))),
        Which::ChargeSquared => Ok(CMat::from_diagonal(&nalgebra::DVector::from_fn(d, |i, _| {
            c(n(i) * n(i))
        }))),
        Which::Flux | Which::FluxSquared => Err(Error::Unsupported(
            "flux operator in a charge basis (mode has an inductive term?)".into(),
        )),
        Which::Exp(k) => shift(k),
        Which::CosFlux(k, off) => {
            let e = shift(k)? * C64::from_polar(1.0, 2.0 * PI * off);
            Ok((&e + e.adjoint()) * c(0.5))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eigh, herm_fn, max_anti_hermitian};

    fn ho(nmax: usize) -> ModeBasis {
        ModeBasis::from_spec(&BasisSpec::Ho { nmax, impedance: None }, 1.0 / 5.0, 1.0 / 2500.0, 0).unwrap()
    }

    #[test]
    fn charge_diagonal() {
        let b = ModeBasis::Charge {
            cutoff: 2,
            offset: 0.25,
        };
        let q = b.operator(Which::Charge).unwrap();
        let want = [-1.75, -0.75, 0.25, 1.25, 2.25];
        for i in 0..5 {
            assert_eq!(q[(i, i)].re, want[i]);
        }
        assert!(b.operator(Which::Exp(0.5)).is_err());
        assert!(b.operator(Which::Flux).is_err());
    }

    #[test]
    fn oscillator_spectrum() {
        let b = ho(30);
        let (a, l) = (E_CC / 5.0, E_LL / 2500.0);
        let h = b.operator(Which::ChargeSquared).unwrap() * c(a) + b.operator(Which::FluxSquared).unwrap() * c(l);
        let (w, _) = eigh(&h);
        let omega = (a * l).sqrt() / PI;
        if let ModeBasis::HarmonicOscillator { frequency, .. } = b {
            assert!((frequency - omega).abs() < 1e-9 * omega);
        }
        // with the width matched to the mode, H is diagonal in number states
        for n in 0..30 {
            assert!((w[n] - omega * (n as f64 + 0.5)).abs() < 1e-9 * omega, "{n}");
        }
    }

    #[test]
    fn canonical_commutator() {
        let b = ho(8);
        let phi = b.operator(Which::Flux).unwrap();
        let q = b.operator(Which::Charge).unwrap();
        let comm = &phi * &q - &q * &phi;
        let expect = I / (2.0 * PI);
        for i in 0..8 {
            for j in 0..9 {
                let want = if i == j { expect } else { c(0.0) };
                assert!((comm[(i, j)] - want).norm() < 1e-12);
            }
        }
        // the last state carries the truncation defect
        assert!((comm[(8, 8)] - expect).norm() > 0.1);
    }

    #[test]
    fn displacement_matches_large_basis_exponential() {
        let b = ho(20);
        let big = ho(120);
        let e = b.operator(Which::Exp(1.0)).unwrap();
        let phi = big.operator(Which::Flux).unwrap();
        let cosm = herm_fn(&phi, |x| (2.0 * PI * x).cos());
        let sinm = herm_fn(&phi, |x| (2.0 * PI * x).sin());
        let dense = cosm + sinm * I;
        for i in 0..21 {
            for j in 0..21 {
                assert!((dense[(i, j)] - e[(i, j)]).norm() < 1e-9, "{i} {j}");
            }
        }
        assert!(max_anti_hermitian(&b.operator(Which::CosFlux(1.0, 0.3)).unwrap()) < 1e-14);
    }

    #[test]
    fn laguerre_values() {
        // L_2^(1)(x) = (x^2 - 6x + 6)/2
        let x = 0.7;
        assert!((laguerre(2, 1.0, x) - (x * x - 6.0 * x + 6.0) / 2.0).abs() < 1e-14);
        assert_eq!(laguerre(0, 3.0, 2.0), 1.0);
    }
}
