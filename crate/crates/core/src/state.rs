use num_complex::Complex64 as C64;

use crate::basis::{BasisState, CompositeBasis};
use crate::error::{Error, Result};

/// Complex amplitudes over a [`CompositeBasis`].
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    basis: CompositeBasis,
    amplitudes: Vec<C64>,
}

impl StateVector {
    pub fn new(basis: CompositeBasis, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::DimensionMismatch { expected: basis.dim(), found: amplitudes.len() });
        }
        Ok(Self { basis, amplitudes })
    }

    pub fn basis_state(basis: CompositeBasis, state: BasisState) -> Self {
        let mut amplitudes = vec![C64::new(0.0, 0.0); basis.dim()];
        amplitudes[basis.index_of(state)] = C64::new(1.0, 0.0);
        Self { basis, amplitudes }
    }

    /// Normalized superposition `Σ c_k |s_k⟩`.
    pub fn superposition(basis: CompositeBasis, terms: &[(BasisState, C64)]) -> Result<Self> {
        let mut amplitudes = vec![C64::new(0.0, 0.0); basis.dim()];
        for &(s, c) in terms {
            amplitudes[basis.index_of(s)] += c;
        }
        let mut psi = Self { basis, amplitudes };
        psi.normalize()?;
        Ok(psi)
    }

    pub fn basis(&self) -> &CompositeBasis {
        &self.basis
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::Precondition("cannot normalize a zero or non-finite state".into()));
        }
        self.amplitudes.iter_mut().for_each(|a| *a /= n);
        Ok(())
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.amplitudes.len() != other.amplitudes.len() {
            return Err(Error::DimensionMismatch { expected: self.amplitudes.len(), found: other.amplitudes.len() });
        }
        Ok(self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum())
    }

    /// `(probability, basis state)` pairs.
    pub fn populations(&self) -> impl Iterator<Item = (f64, BasisState)> + '_ {
        self.amplitudes.iter().enumerate().map(|(i, a)| (a.norm_sqr(), self.basis.state_of(i)))
    }
}
