//! Circuit quantization, low-lying spectra and effective qubit Hamiltonians
//! for lumped-element superconducting circuits.

pub mod circuit;
pub mod cli;
pub mod error;
pub mod linalg;
pub mod model;
pub mod operators;
pub mod reduce_multi;
pub mod reduce_single;
pub mod spectra;
pub mod units;

pub use error::{Error, Result};
