//! Floquet-engineered anisotropic Dicke model with nearest-neighbour Rydberg
//! interactions: coupling engineering, parity-resolved exact diagonalization
//! and adiabatic sweep dynamics.

// `!(x > 0.0)` is used on purpose so that NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod cli;
pub mod couplings;
pub mod dynamics;
pub mod error;
pub mod hamiltonian;
pub mod linalg;
pub mod observables;
pub mod sparse;
pub mod spectra;
pub mod state;
pub mod validate;

pub use error::{Error, Result};
