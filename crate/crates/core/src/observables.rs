//! Scalar diagnostics of a state. Everything here is diagonal in the
//! occupation basis except the fidelity.

use serde::{Deserialize, Serialize};

use crate::basis::Parity;
use crate::error::{Error, Result};
use crate::state::StateVector;

/// `|⟨ψ|φ⟩|²`.
pub fn fidelity(psi: &StateVector, phi: &StateVector) -> Result<f64> {
    Ok(psi.inner(phi)?.norm_sqr())
}

/// `⟨a†a⟩`.
pub fn photon_number(psi: &StateVector) -> f64 {
    psi.populations().map(|(p, s)| p * s.photon_n as f64).sum()
}

/// `⟨a†a + Σ n_j⟩`.
pub fn excitation_number(psi: &StateVector) -> f64 {
    psi.populations().map(|(p, s)| p * (s.photon_n + s.n_excited()) as f64).sum()
}

/// Local operator entering the structure factor.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityOperator {
    /// n_j ∈ {0, 1}
    #[default]
    Occupation,
    /// σ^z_j ∈ {−1, +1}
    SigmaZ,
}

/// `⟨|Σ_j O_j e^{iqj}|²⟩ / N²` with sites at `j = 0..N`.
pub fn structure_factor(psi: &StateVector, q: f64, op: DensityOperator) -> f64 {
    let n = psi.basis().n_sites();
    let phases: Vec<(f64, f64)> = (0..n).map(|j| ((q * j as f64).cos(), (q * j as f64).sin())).collect();
    let total: f64 = psi
        .populations()
        .filter(|(p, _)| *p > 0.0)
        .map(|(p, s)| {
            let (mut re, mut im) = (0.0, 0.0);
            for (j, (c, sn)) in phases.iter().enumerate() {
                let o = match (op, s.is_excited(j)) {
                    (DensityOperator::Occupation, true) => 1.0,
                    (DensityOperator::Occupation, false) => 0.0,
                    (DensityOperator::SigmaZ, true) => 1.0,
                    (DensityOperator::SigmaZ, false) => -1.0,
                };
                re += o * c;
                im += o * sn;
            }
            p * (re * re + im * im)
        })
        .sum();
    total / (n * n) as f64
}

/// `⟨P⟩`.
pub fn parity_expect(psi: &StateVector) -> f64 {
    let b = *psi.basis();
    psi.populations().map(|(p, s)| p * b.parity_of(s).sign() as f64).sum()
}

/// Probability of photon numbers above `n_max − m`.
pub fn fock_tail(psi: &StateVector, m: usize) -> Result<f64> {
    let cutoff = psi.basis().photon_cutoff();
    if m > cutoff + 1 {
        return Err(Error::InvalidParameter(format!("tail width {m} exceeds the {} Fock levels", cutoff + 1)));
    }
    let threshold = cutoff + 1 - m;
    Ok(psi.populations().filter(|(_, s)| s.photon_n >= threshold).map(|(p, _)| p).sum())
}

/// Population of one parity sector.
pub fn sector_weight(psi: &StateVector, parity: Parity) -> f64 {
    let b = *psi.basis();
    psi.populations().filter(|(_, s)| b.parity_of(*s) == parity).map(|(p, _)| p).sum()
}
