//! Hilbert-space bookkeeping for a chain of hard-core two-level atoms coupled
//! to a single truncated cavity mode.
//!
//! Flat index layout: `index = spin_bits * (photon_cutoff + 1) + photon_n`,
//! where bit `j` of `spin_bits` is 1 when site `j` is in the Rydberg state.
//! Photon number is the fastest-running index, so every fixed spin
//! configuration owns a contiguous block of Fock states.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Eigenvalue of the parity operator `(-1)^{a†a} ∏ σ^z_j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn sign(self) -> i32 {
        match self {
            Parity::Even => 1,
            Parity::Odd => -1,
        }
    }

    pub fn from_sign(sign: i32) -> Self {
        if sign >= 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn both() -> [Parity; 2] {
        [Parity::Even, Parity::Odd]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BasisState {
    /// Bit `j` set means site `j` is excited.
    pub spin_config: u64,
    pub photon_n: usize,
}

impl BasisState {
    pub fn new(spin_config: u64, photon_n: usize) -> Self {
        Self { spin_config, photon_n }
    }

    pub fn is_excited(&self, site: usize) -> bool {
        (self.spin_config >> site) & 1 == 1
    }

    pub fn n_excited(&self) -> usize {
        self.spin_config.count_ones() as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CompositeBasis {
    n_sites: usize,
    photon_cutoff: usize,
    dim: usize,
}

impl CompositeBasis {
    pub fn new(n_sites: usize, photon_cutoff: usize) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::InvalidParameter("n_sites must be at least 1".into()));
        }
        let too_large = || Error::BasisTooLarge { n_sites, photon_cutoff };
        if n_sites >= 63 {
            return Err(too_large());
        }
        let dim = (1usize << n_sites)
            .checked_mul(photon_cutoff.checked_add(1).ok_or_else(too_large)?)
            .ok_or_else(too_large)?;
        // keep dense vectors of this length addressable
        if dim > (isize::MAX as usize) / 16 {
            return Err(too_large());
        }
        Ok(Self { n_sites, photon_cutoff, dim })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn photon_cutoff(&self) -> usize {
        self.photon_cutoff
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_spin_configs(&self) -> usize {
        1 << self.n_sites
    }

    pub fn index_of(&self, state: BasisState) -> usize {
        debug_assert!(state.photon_n <= self.photon_cutoff);
        debug_assert!((state.spin_config as usize) < self.n_spin_configs());
        state.spin_config as usize * (self.photon_cutoff + 1) + state.photon_n
    }

    pub fn state_of(&self, index: usize) -> BasisState {
        debug_assert!(index < self.dim);
        let block = self.photon_cutoff + 1;
        BasisState {
            spin_config: (index / block) as u64,
            photon_n: index % block,
        }
    }

    pub fn states(&self) -> impl Iterator<Item = BasisState> + '_ {
        (0..self.dim).map(move |i| self.state_of(i))
    }

    pub fn parity_of(&self, state: BasisState) -> Parity {
        parity_of(state, self.n_sites)
    }

    /// Flat indices of one parity sector, ascending.
    pub fn sector_indices(&self, parity: Parity) -> Vec<usize> {
        (0..self.dim)
            .filter(|&i| self.parity_of(self.state_of(i)) == parity)
            .collect()
    }

    /// Index of `|g…g, n⟩`.
    pub fn vacuum_index(&self, photon_n: usize) -> usize {
        self.index_of(BasisState::new(0, photon_n))
    }
}

/// `(-1)^{n_photon} · (-1)^{N - n_excited}`; σ^z is +1 on |e⟩ and −1 on |g⟩.
pub fn parity_of(state: BasisState, n_sites: usize) -> Parity {
    let flips = state.photon_n + (n_sites - state.n_excited());
    if flips.is_multiple_of(2) {
        Parity::Even
    } else {
        Parity::Odd
    }
}

/// Single-site level of the three-level ladder used by the reduction checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Level {
    Ground = 0,
    Intermediate = 1,
    Rydberg = 2,
}

impl Level {
    const ALL: [Level; 3] = [Level::Ground, Level::Intermediate, Level::Rydberg];
}

/// Chain of three-level atoms {g, m, e} times a truncated Fock space.
/// Index layout mirrors [`CompositeBasis`] with base-3 site digits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ThreeLevelBasis {
    n_sites: usize,
    photon_cutoff: usize,
    dim: usize,
}

impl ThreeLevelBasis {
    pub fn new(n_sites: usize, photon_cutoff: usize) -> Result<Self> {
        if n_sites == 0 {
            return Err(Error::InvalidParameter("n_sites must be at least 1".into()));
        }
        let too_large = || Error::BasisTooLarge { n_sites, photon_cutoff };
        let spin = 3usize.checked_pow(n_sites as u32).ok_or_else(too_large)?;
        let dim = spin.checked_mul(photon_cutoff + 1).ok_or_else(too_large)?;
        Ok(Self { n_sites, photon_cutoff, dim })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn photon_cutoff(&self) -> usize {
        self.photon_cutoff
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_spin_configs(&self) -> usize {
        self.dim / (self.photon_cutoff + 1)
    }

    pub fn index_of(&self, levels: &[Level], photon_n: usize) -> usize {
        debug_assert_eq!(levels.len(), self.n_sites);
        let spin = levels
            .iter()
            .rev()
            .fold(0usize, |acc, &l| acc * 3 + l as usize);
        spin * (self.photon_cutoff + 1) + photon_n
    }

    pub fn levels_of(&self, index: usize) -> (Vec<Level>, usize) {
        let block = self.photon_cutoff + 1;
        let mut spin = index / block;
        let levels = (0..self.n_sites)
            .map(|_| {
                let l = Level::ALL[spin % 3];
                spin /= 3;
                l
            })
            .collect();
        (levels, index % block)
    }
}
