//! Operator assembly.
//!
//! The static model is
//!
//! ```text
//! H = ω̃_C a†a + ω̃_A Σ n_j + V Σ_<ij> n_i n_j
//!   + (1−α) Ω/√N Σ (σ⁺_j a + a† σ⁻_j) + α Ω/√N Σ (σ⁺_j a† + a σ⁻_j)
//! ```
//!
//! Each summand is kept as its own sparse operator so that sweeps only
//! rescale coefficients. Time-dependent Hamiltonians follow the same idea:
//! a fixed list of Hermitian operators and one schedule returning their
//! scalar coefficients at time `t`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::basis::{BasisState, CompositeBasis, Level, Parity, ThreeLevelBasis};
use crate::couplings::{renormalized_frequencies, EngineeringParams};
use crate::error::{Error, Result};
use crate::sparse::SparseOperator;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Open,
    #[default]
    Periodic,
}

/// Nearest-neighbour bonds `(i, j)` with `i < j`, deduplicated.
pub fn bonds(n_sites: usize, boundary: Boundary) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = (0..n_sites.saturating_sub(1)).map(|j| (j, j + 1)).collect();
    if boundary == Boundary::Periodic && n_sites > 2 {
        out.push((0, n_sites - 1));
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub omega_c_tilde: f64,
    pub omega_a_tilde: f64,
    pub v_int: f64,
    pub omega: f64,
    pub alpha: f64,
    #[serde(default)]
    pub boundary: Boundary,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        for (v, name) in [
            (self.omega_c_tilde, "omega_c_tilde"),
            (self.omega_a_tilde, "omega_a_tilde"),
            (self.v_int, "v_int"),
            (self.omega, "omega"),
            (self.alpha, "alpha"),
        ] {
            if !v.is_finite() {
                return Err(Error::NonFinite(name));
            }
        }
        if self.v_int < 0.0 {
            return Err(Error::InvalidParameter(format!("v_int must be non-negative, got {}", self.v_int)));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        Ok(())
    }

    /// Coefficients of (photon, atom, rydberg, rw, crw).
    pub fn coefficients(&self, n_sites: usize) -> [f64; 5] {
        let scale = self.omega / (n_sites as f64).sqrt();
        [
            self.omega_c_tilde,
            self.omega_a_tilde,
            self.v_int,
            (1.0 - self.alpha) * scale,
            self.alpha * scale,
        ]
    }
}

/// The five summands of the static model on a common basis.
#[derive(Clone, Debug)]
pub struct TermSet {
    pub basis: CompositeBasis,
    pub boundary: Boundary,
    /// a†a
    pub photon_energy: SparseOperator,
    /// Σ n_j
    pub atom_number: SparseOperator,
    /// Σ_<ij> n_i n_j
    pub rydberg: SparseOperator,
    /// Σ (σ⁺_j a + a† σ⁻_j)
    pub rw: SparseOperator,
    /// Σ (σ⁺_j a† + a σ⁻_j)
    pub crw: SparseOperator,
}

impl TermSet {
    pub fn operators(&self) -> [&SparseOperator; 5] {
        [&self.photon_energy, &self.atom_number, &self.rydberg, &self.rw, &self.crw]
    }

    pub fn names() -> [&'static str; 5] {
        ["photon_energy", "atom_number", "rydberg", "rw", "crw"]
    }

    /// Time-dependent Hamiltonian whose parameters follow `schedule`.
    pub fn schedule<F>(&self, schedule: F) -> TimeDependentHamiltonian
    where
        F: Fn(f64) -> ModelParams + Send + Sync + 'static,
    {
        let n = self.basis.n_sites();
        let ops = Self::names()
            .iter()
            .zip(self.operators())
            .map(|(name, op)| (name.to_string(), op.clone()))
            .collect();
        TimeDependentHamiltonian::new(ops, move |t| schedule(t).coefficients(n).to_vec())
    }
}

/// σ⁺_j-type transitions `|s⟩ → |s | 1<<j⟩` paired with a photon change.
fn ladder_triplets(basis: &CompositeBasis, photon_step: isize) -> Vec<(usize, usize, f64)> {
    let cutoff = basis.photon_cutoff() as isize;
    let mut out = Vec::new();
    for from in 0..basis.dim() {
        let s = basis.state_of(from);
        for site in 0..basis.n_sites() {
            if s.is_excited(site) {
                continue;
            }
            let n_new = s.photon_n as isize + photon_step;
            if n_new < 0 || n_new > cutoff {
                continue;
            }
            // a|n⟩ = √n |n−1⟩, a†|n⟩ = √(n+1) |n+1⟩
            let amp = (s.photon_n.max(n_new as usize) as f64).sqrt();
            let to = basis.index_of(BasisState::new(s.spin_config | (1 << site), n_new as usize));
            out.push((to, from, amp));
        }
    }
    out
}

fn hermitian_pair(dim: usize, raising: &[(usize, usize, f64)]) -> SparseOperator {
    SparseOperator::from_real_triplets(
        dim,
        raising.iter().flat_map(|&(r, c, v)| [(r, c, v), (c, r, v)]),
    )
}

/// `i(K − K†)` for a real raising operator K.
fn quadrature_pair(dim: usize, raising: &[(usize, usize, f64)]) -> SparseOperator {
    SparseOperator::from_complex_triplets(
        dim,
        raising
            .iter()
            .flat_map(|&(r, c, v)| [(r, c, C64::new(0.0, v)), (c, r, C64::new(0.0, -v))]),
    )
}

pub fn build_adm_terms(basis: &CompositeBasis, boundary: Boundary) -> TermSet {
    let dim = basis.dim();
    let bond_list = bonds(basis.n_sites(), boundary);
    let mut photon = Vec::with_capacity(dim);
    let mut atoms = Vec::with_capacity(dim);
    let mut ryd = Vec::with_capacity(dim);
    for s in basis.states() {
        photon.push(s.photon_n as f64);
        atoms.push(s.n_excited() as f64);
        ryd.push(bond_list.iter().filter(|&&(i, j)| s.is_excited(i) && s.is_excited(j)).count() as f64);
    }
    TermSet {
        basis: *basis,
        boundary,
        photon_energy: SparseOperator::diagonal(&photon),
        atom_number: SparseOperator::diagonal(&atoms),
        rydberg: SparseOperator::diagonal(&ryd),
        rw: hermitian_pair(dim, &ladder_triplets(basis, -1)),
        crw: hermitian_pair(dim, &ladder_triplets(basis, 1)),
    }
}

/// `i(Σ σ⁺a − Σ a†σ⁻)` and `i(Σ σ⁺a† − Σ aσ⁻)`: the quadratures that carry
/// the imaginary part of a complex coupling phase.
pub fn coupling_quadratures(basis: &CompositeBasis) -> (SparseOperator, SparseOperator) {
    let dim = basis.dim();
    (
        quadrature_pair(dim, &ladder_triplets(basis, -1)),
        quadrature_pair(dim, &ladder_triplets(basis, 1)),
    )
}

pub fn assemble(terms: &TermSet, params: &ModelParams) -> Result<SparseOperator> {
    let c = params.coefficients(terms.basis.n_sites());
    let ops = terms.operators();
    SparseOperator::linear_combination(&[
        (c[0], ops[0]),
        (c[1], ops[1]),
        (c[2], ops[2]),
        (c[3], ops[3]),
        (c[4], ops[4]),
    ])
}

pub fn parity_operator(basis: &CompositeBasis) -> SparseOperator {
    let diag: Vec<f64> = basis.states().map(|s| basis.parity_of(s).sign() as f64).collect();
    SparseOperator::diagonal(&diag)
}

/// `a†a + Σ n_j`, conserved when the counter-rotating coupling vanishes.
pub fn excitation_operator(basis: &CompositeBasis) -> SparseOperator {
    let diag: Vec<f64> = basis.states().map(|s| (s.photon_n + s.n_excited()) as f64).collect();
    SparseOperator::diagonal(&diag)
}

pub fn parity_diagonal(basis: &CompositeBasis) -> Vec<Parity> {
    basis.states().map(|s| basis.parity_of(s)).collect()
}

type Schedule = dyn Fn(f64) -> Vec<f64> + Send + Sync;

/// `H(t) = Σ_k c_k(t) O_k` with fixed Hermitian operators `O_k`.
#[derive(Clone)]
pub struct TimeDependentHamiltonian {
    dim: usize,
    ops: Vec<(String, SparseOperator)>,
    bounds: Vec<f64>,
    schedule: Arc<Schedule>,
}

impl fmt::Debug for TimeDependentHamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TimeDependentHamiltonian")
            .field("dim", &self.dim)
            .field("terms", &self.ops.iter().map(|(n, _)| n.as_str()).collect::<Vec<_>>())
            .finish()
    }
}

impl TimeDependentHamiltonian {
    /// `schedule(t)` must return one coefficient per operator.
    pub fn new<F>(ops: Vec<(String, SparseOperator)>, schedule: F) -> Self
    where
        F: Fn(f64) -> Vec<f64> + Send + Sync + 'static,
    {
        let dim = ops.first().map(|(_, o)| o.dim()).unwrap_or(0);
        assert!(ops.iter().all(|(_, o)| o.dim() == dim), "operators must share one dimension");
        let bounds = ops.iter().map(|(_, o)| o.gershgorin_bound()).collect();
        Self { dim, ops, bounds, schedule: Arc::new(schedule) }
    }

    pub fn constant(op: SparseOperator) -> Self {
        Self::new(vec![("static".to_string(), op)], |_| vec![1.0])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn term_names(&self) -> impl Iterator<Item = &str> {
        self.ops.iter().map(|(n, _)| n.as_str())
    }

    pub fn coefficients(&self, t: f64) -> Vec<f64> {
        let c = (self.schedule)(t);
        debug_assert_eq!(c.len(), self.ops.len());
        c
    }

    /// `y = H(t) x`.
    pub fn apply(&self, t: f64, x: &[C64], y: &mut [C64]) {
        y.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        for (c, (_, op)) in self.coefficients(t).into_iter().zip(&self.ops) {
            if c != 0.0 {
                op.apply_add(c, x, y);
            }
        }
    }

    pub fn evaluate(&self, t: f64) -> SparseOperator {
        let c = self.coefficients(t);
        let terms: Vec<(f64, &SparseOperator)> = c.iter().copied().zip(self.ops.iter().map(|(_, o)| o)).collect();
        SparseOperator::linear_combination(&terms).expect("operators share one dimension")
    }

    /// Triangle-inequality bound on ‖H(t)‖ from per-term Gershgorin bounds.
    pub fn norm_bound(&self, t: f64) -> f64 {
        self.coefficients(t).iter().zip(&self.bounds).map(|(c, b)| c.abs() * b).sum()
    }
}

/// Representation of the driven three-level chain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ThreeLevelFrame {
    /// Classical leg `Ω₂ cos(ω_p t)/√N (|m⟩⟨e| + h.c.)` with |e⟩ at
    /// `ω₁ + ω₂ + A cos ω_s t`, where `ω₂ = Δ₂ + ω_p`.
    Lab { probe_freq: f64 },
    /// Frame rotating at ω_p on |e⟩ after the rotating-wave approximation on
    /// the classical leg: |e⟩ at `ω₁ + Δ₂ + A cos ω_s t`, static Ω₂/√N leg.
    Rotating,
}

/// Additional exact change of frame `exp(i t (ω_ref N_tot + ω_e n_e))` with
/// `N_tot = a†a + Σ (n_m + n_e)`. It removes large common energies so that
/// integration steps are set by detunings; zero reproduces the bare frame.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct InteractionFrame {
    pub reference: f64,
    pub rydberg_shift: f64,
}

/// Options of [`build_three_level`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThreeLevelOptions {
    pub frame: ThreeLevelFrame,
    pub interaction: InteractionFrame,
    pub boundary: Boundary,
    /// Keep the `a†|m⟩⟨g|` leg of the cavity coupling. Dropping it is the
    /// `ω₁ + ω_C → ∞` limit.
    pub cavity_counter_rotating: bool,
    /// Largest accepted Hilbert-space dimension.
    pub dim_cap: usize,
}

impl Default for ThreeLevelOptions {
    fn default() -> Self {
        Self {
            frame: ThreeLevelFrame::Rotating,
            interaction: InteractionFrame::default(),
            boundary: Boundary::Periodic,
            cavity_counter_rotating: true,
            dim_cap: 100_000,
        }
    }
}

/// Driven three-level Hamiltonian with ω₁ = ω_C + Δ₁.
pub fn build_three_level(
    p: &EngineeringParams,
    v_int: f64,
    basis: &ThreeLevelBasis,
    options: &ThreeLevelOptions,
) -> Result<TimeDependentHamiltonian> {
    let ThreeLevelOptions { frame, interaction, boundary, cavity_counter_rotating, dim_cap } = *options;
    if basis.dim() > dim_cap {
        return Err(Error::Precondition(format!(
            "three-level basis of dimension {} exceeds the cap {dim_cap}",
            basis.dim()
        )));
    }
    let dim = basis.dim();
    let n = basis.n_sites();
    let inv_root_n = 1.0 / (n as f64).sqrt();
    let omega_1_level = p.omega_c_bare + p.delta_1;
    let (rydberg_energy, probe) = match frame {
        ThreeLevelFrame::Lab { probe_freq } => (omega_1_level + p.delta_2 + probe_freq, probe_freq),
        ThreeLevelFrame::Rotating => (omega_1_level + p.delta_2, 0.0),
    };
    let bond_list = bonds(n, boundary);
    let InteractionFrame { reference, rydberg_shift } = interaction;

    let mut static_diag = vec![0.0; dim];
    let mut rydberg_count = vec![0.0; dim];
    let mut cavity_rw = Vec::new(); // a |m⟩⟨g|, keeps N_tot
    let mut cavity_crw = Vec::new(); // a† |m⟩⟨g|, raises N_tot by 2
    let mut classical = Vec::new(); // |e⟩⟨m|
    let cutoff = basis.photon_cutoff();
    for idx in 0..dim {
        let (levels, photons) = basis.levels_of(idx);
        let n_m = levels.iter().filter(|&&l| l == Level::Intermediate).count();
        let n_e = levels.iter().filter(|&&l| l == Level::Rydberg).count();
        let n_tot = (photons + n_m + n_e) as f64;
        let pairs = bond_list
            .iter()
            .filter(|&&(i, j)| levels[i] == Level::Rydberg && levels[j] == Level::Rydberg)
            .count() as f64;
        static_diag[idx] = p.omega_c_bare * photons as f64
            + omega_1_level * n_m as f64
            + rydberg_energy * n_e as f64
            + v_int * pairs
            - reference * n_tot
            - rydberg_shift * n_e as f64;
        rydberg_count[idx] = n_e as f64;
        for site in 0..n {
            match levels[site] {
                Level::Ground => {
                    let mut raised = levels.clone();
                    raised[site] = Level::Intermediate;
                    if photons >= 1 {
                        let to = basis.index_of(&raised, photons - 1);
                        cavity_rw.push((to, idx, (photons as f64).sqrt() * inv_root_n));
                    }
                    if photons < cutoff {
                        let to = basis.index_of(&raised, photons + 1);
                        cavity_crw.push((to, idx, ((photons + 1) as f64).sqrt() * inv_root_n));
                    }
                }
                Level::Intermediate => {
                    let mut raised = levels.clone();
                    raised[site] = Level::Rydberg;
                    classical.push((basis.index_of(&raised, photons), idx, inv_root_n));
                }
                Level::Rydberg => {}
            }
        }
    }

    let mut ops = vec![
        ("diagonal".to_string(), SparseOperator::diagonal(&static_diag)),
        ("modulation".to_string(), SparseOperator::diagonal(&rydberg_count)),
        ("cavity_rw_x".to_string(), hermitian_pair(dim, &cavity_rw)),
        ("cavity_crw_x".to_string(), hermitian_pair(dim, &cavity_crw)),
        ("cavity_crw_y".to_string(), quadrature_pair(dim, &cavity_crw)),
        ("classical_x".to_string(), hermitian_pair(dim, &classical)),
        ("classical_y".to_string(), quadrature_pair(dim, &classical)),
    ];
    let has_quadratures = reference != 0.0 || rydberg_shift != 0.0;
    ops.retain(|(name, _)| {
        (has_quadratures || !name.ends_with("_y")) && (cavity_counter_rotating || !name.starts_with("cavity_crw"))
    });
    let names: Vec<String> = ops.iter().map(|(n, _)| n.clone()).collect();

    let (omega_1, omega_2) = (p.omega_1, p.omega_2);
    let (amp, mod_freq) = (p.drive_amp, p.drive_freq);
    let crw_rate = 2.0 * reference;
    let classical_rate = rydberg_shift;
    Ok(TimeDependentHamiltonian::new(ops, move |t| {
        let drive = match frame {
            ThreeLevelFrame::Lab { .. } => omega_2 * (probe * t).cos(),
            ThreeLevelFrame::Rotating => omega_2,
        };
        let (crw_phase, classical_phase) = (crw_rate * t, classical_rate * t);
        names
            .iter()
            .map(|name| match name.as_str() {
                "diagonal" => 1.0,
                "modulation" => amp * (mod_freq * t).cos(),
                "cavity_rw_x" => omega_1,
                "cavity_crw_x" => omega_1 * crw_phase.cos(),
                "cavity_crw_y" => omega_1 * crw_phase.sin(),
                "classical_x" => drive * classical_phase.cos(),
                _ => drive * classical_phase.sin(),
            })
            .collect()
    }))
}

/// Effective two-level model `ω_C a†a + (ω_A + A cos ω_s t) Σ n_j + V Σ n_i n_j
/// + Σ (g_rw aσ⁺_j + g_crw a†σ⁺_j + h.c.)` in the same interaction frame as
/// [`build_three_level`] (ω_ref on `a†a + Σ n_j`, ω_e on `Σ n_j`).
#[allow(clippy::too_many_arguments)]
pub fn build_effective_two_level(
    basis: &CompositeBasis,
    omega_c: f64,
    omega_a: f64,
    v_int: f64,
    g_rw: f64,
    g_crw: f64,
    drive_amp: f64,
    drive_freq: f64,
    interaction: InteractionFrame,
    boundary: Boundary,
) -> TimeDependentHamiltonian {
    let terms = build_adm_terms(basis, boundary);
    let (rw_y, crw_y) = coupling_quadratures(basis);
    let InteractionFrame { reference, rydberg_shift } = interaction;
    // aσ⁺ keeps a†a + Σn and raises Σn by one; a†σ⁺ raises both
    let rw_rate = rydberg_shift;
    let crw_rate = 2.0 * reference + rydberg_shift;
    let ops = vec![
        ("photon_energy".to_string(), terms.photon_energy),
        ("atom_number".to_string(), terms.atom_number),
        ("rydberg".to_string(), terms.rydberg),
        ("rw_x".to_string(), terms.rw),
        ("rw_y".to_string(), rw_y),
        ("crw_x".to_string(), terms.crw),
        ("crw_y".to_string(), crw_y),
    ];
    TimeDependentHamiltonian::new(ops, move |t| {
        let (rw_phase, crw_phase) = (rw_rate * t, crw_rate * t);
        vec![
            omega_c - reference,
            omega_a + drive_amp * (drive_freq * t).cos() - reference - rydberg_shift,
            v_int,
            g_rw * rw_phase.cos(),
            g_rw * rw_phase.sin(),
            g_crw * crw_phase.cos(),
            g_crw * crw_phase.sin(),
        ]
    })
}

/// Modulated-frame Hamiltonian after the side-band frame change:
///
/// ```text
/// H_F(t) = Ω_e1/√N Σ { e^{iK sin ω_s t} aσ⁺ + h.c. }
///        + Ω_e2/√N Σ { e^{i(K sin ω_s t + 2 n_t ω_s t)} a†σ⁺ + h.c. }
///        + ω̃_C a†a + ω̃_A Σ n_j + V Σ n_i n_j,      K = A/ω_s.
/// ```
pub fn build_floquet_frame(
    p: &EngineeringParams,
    omega_e1: f64,
    omega_e2: f64,
    v_int: f64,
    basis: &CompositeBasis,
    boundary: Boundary,
) -> Result<TimeDependentHamiltonian> {
    p.validate()?;
    let terms = build_adm_terms(basis, boundary);
    let (rw_y, crw_y) = coupling_quadratures(basis);
    let (wc, wa) = renormalized_frequencies(p);
    let root_n = (basis.n_sites() as f64).sqrt();
    let (g1, g2) = (omega_e1 / root_n, omega_e2 / root_n);
    let k = p.drive_ratio();
    let ws = p.drive_freq;
    let sideband = 2.0 * p.sideband as f64;
    let ops = vec![
        ("photon_energy".to_string(), terms.photon_energy),
        ("atom_number".to_string(), terms.atom_number),
        ("rydberg".to_string(), terms.rydberg),
        ("rw_x".to_string(), terms.rw),
        ("rw_y".to_string(), rw_y),
        ("crw_x".to_string(), terms.crw),
        ("crw_y".to_string(), crw_y),
    ];
    Ok(TimeDependentHamiltonian::new(ops, move |t| {
        let phase_rw = k * (ws * t).sin();
        let phase_crw = phase_rw + sideband * ws * t;
        vec![
            wc,
            wa,
            v_int,
            g1 * phase_rw.cos(),
            g1 * phase_rw.sin(),
            g2 * phase_crw.cos(),
            g2 * phase_crw.sin(),
        ]
    }))
}
