//! Fixed-step RK4 integration of `i dψ/dt = H(t) ψ` and the two linear
//! sweep protocols.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::basis::Parity;
use crate::error::{Error, Result};
use crate::hamiltonian::{assemble, ModelParams, TermSet, TimeDependentHamiltonian};
use crate::observables::{fidelity, fock_tail, parity_expect, photon_number, structure_factor, DensityOperator};
use crate::spectra::{eigenpairs_in_sector, spectral_norm, Control};
use crate::state::StateVector;

/// Upper limit on `dt · ‖H‖`.
pub const STABILITY_LIMIT: f64 = 0.1;
/// Population in the two highest Fock levels that triggers a warning.
pub const FOCK_TAIL_WARNING: f64 = 1e-6;
pub const DEFAULT_SAMPLES: usize = 200;

/// Scratch buffers for one RK4 integrator.
#[derive(Clone, Debug)]
pub struct Rk4 {
    k: [Vec<C64>; 4],
    tmp: Vec<C64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        let z = vec![C64::new(0.0, 0.0); dim];
        Self { k: [z.clone(), z.clone(), z.clone(), z.clone()], tmp: z }
    }

    /// Advance `psi` from `t` to `t + dt` in place.
    pub fn step(&mut self, h: &TimeDependentHamiltonian, psi: &mut [C64], t: f64, dt: f64) -> Result<()> {
        let minus_i = C64::new(0.0, -1.0);
        let [k1, k2, k3, k4] = &mut self.k;
        let tmp = &mut self.tmp;

        h.apply(t, psi, k1);
        k1.iter_mut().for_each(|v| *v *= minus_i);
        axpy_into(tmp, psi, 0.5 * dt, k1);
        h.apply(t + 0.5 * dt, tmp, k2);
        k2.iter_mut().for_each(|v| *v *= minus_i);
        axpy_into(tmp, psi, 0.5 * dt, k2);
        h.apply(t + 0.5 * dt, tmp, k3);
        k3.iter_mut().for_each(|v| *v *= minus_i);
        axpy_into(tmp, psi, dt, k3);
        h.apply(t + dt, tmp, k4);
        k4.iter_mut().for_each(|v| *v *= minus_i);

        let w = dt / 6.0;
        let mut finite = true;
        for i in 0..psi.len() {
            psi[i] += (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * w;
            finite &= psi[i].re.is_finite() && psi[i].im.is_finite();
        }
        if finite {
            Ok(())
        } else {
            Err(Error::NumericalBreakdown { t: t + dt })
        }
    }
}

fn axpy_into(out: &mut [C64], x: &[C64], a: f64, y: &[C64]) {
    for ((o, xi), yi) in out.iter_mut().zip(x).zip(y) {
        *o = xi + yi * a;
    }
}

/// Single RK4 step on a fresh workspace.
pub fn rk4_step(h: &TimeDependentHamiltonian, psi: &StateVector, t: f64, dt: f64) -> Result<StateVector> {
    let mut out = psi.clone();
    Rk4::new(h.dim()).step(h, out.amplitudes_mut(), t, dt)?;
    Ok(out)
}

/// Integrate from `t0` over `n_steps` steps of size `dt`, calling
/// `observe(step, t, ψ)` after every step (and once at step 0).
pub fn evolve<F>(
    h: &TimeDependentHamiltonian,
    psi: &mut [C64],
    t0: f64,
    dt: f64,
    n_steps: usize,
    mut observe: F,
) -> Result<()>
where
    F: FnMut(usize, f64, &[C64]) -> Result<()>,
{
    if psi.len() != h.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), found: psi.len() });
    }
    let mut rk = Rk4::new(h.dim());
    observe(0, t0, psi)?;
    for s in 0..n_steps {
        let t = t0 + s as f64 * dt;
        rk.step(h, psi, t, dt)?;
        observe(s + 1, t0 + (s + 1) as f64 * dt, psi)?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SweepKind {
    /// Ω(t) = Ω_final · t/T with every other parameter fixed.
    Sr { omega_final: f64 },
    /// ω̃_A(t) linear from start to end at fixed Ω.
    Srs { omega_a_start: f64, omega_a_end: f64 },
}

impl SweepKind {
    pub fn control(&self) -> Control {
        match self {
            SweepKind::Sr { .. } => Control::Coupling,
            SweepKind::Srs { .. } => Control::AtomFrequency,
        }
    }

    /// Control value at sweep fraction `s ∈ [0, 1]`.
    pub fn control_at(&self, s: f64) -> f64 {
        match *self {
            SweepKind::Sr { omega_final } => omega_final * s,
            SweepKind::Srs { omega_a_start, omega_a_end } => omega_a_start + (omega_a_end - omega_a_start) * s,
        }
    }

    pub fn params_at(&self, base: &ModelParams, s: f64) -> ModelParams {
        self.control().apply(base, self.control_at(s))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepProtocol {
    pub kind: SweepKind,
    pub duration: f64,
    /// Integrator step; `None` picks `0.1 / max ‖H‖`.
    pub dt: Option<f64>,
    /// Steps between recorded samples; `None` gives about
    /// [`DEFAULT_SAMPLES`] samples over the sweep.
    pub sample_stride: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservableRecord {
    pub t: f64,
    pub control: f64,
    pub fidelity: f64,
    pub photon_number: f64,
    pub s_pi: f64,
    pub parity_expect: f64,
    pub norm: f64,
}

#[derive(Clone, Debug)]
pub struct SweepOutcome {
    pub records: Vec<ObservableRecord>,
    pub dt: f64,
    pub n_steps: usize,
    /// Largest ‖H‖ over the sweep (attained at an end point).
    pub max_norm_h: f64,
    pub max_norm_drift: f64,
    pub max_parity_drift: f64,
    pub max_fock_tail: f64,
    pub warnings: Vec<String>,
    pub final_state: StateVector,
}

impl SweepOutcome {
    pub fn final_fidelity(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.fidelity)
    }
}

/// Even-sector ground state of `params`.
pub fn ground_state_initial(terms: &TermSet, params: &ModelParams) -> Result<StateVector> {
    params.validate()?;
    let h = assemble(terms, params)?;
    let sol = eigenpairs_in_sector(&h, &terms.basis, Parity::Even, 2.min(terms.basis.sector_indices(Parity::Even).len()))?;
    if sol.len() > 1 {
        let gap = sol.eigenvalues[1] - sol.eigenvalues[0];
        if gap < 1e-10 * sol.eigenvalues[0].abs().max(1.0) {
            return Err(Error::DegenerateGroundState { gap });
        }
    }
    StateVector::new(terms.basis, sol.embed(0))
}

fn lowest_even_state(terms: &TermSet, params: &ModelParams) -> Result<StateVector> {
    let h = assemble(terms, params)?;
    let sol = eigenpairs_in_sector(&h, &terms.basis, Parity::Even, 1)?;
    StateVector::new(terms.basis, sol.embed(0))
}

/// Time step and ‖H‖ maximum for a sweep. ‖H(c)‖ is convex in a linearly
/// swept parameter, so the end points bound it.
pub fn sweep_time_step(terms: &TermSet, base: &ModelParams, protocol: &SweepProtocol) -> Result<(f64, usize, f64)> {
    let norm = [0.0, 1.0]
        .iter()
        .map(|&s| spectral_norm(&assemble(terms, &protocol.kind.params_at(base, s))?, &terms.basis))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let t = protocol.duration;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!("sweep duration must be finite and non-negative, got {t}")));
    }
    let guard = if norm > 0.0 { STABILITY_LIMIT / norm } else { f64::INFINITY };
    let requested = match protocol.dt {
        Some(dt) if !(dt > 0.0) => return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}"))),
        Some(dt) if dt * norm > STABILITY_LIMIT * (1.0 + 1e-12) => return Err(Error::StabilityGuard { dt, norm }),
        Some(dt) => dt,
        None => guard,
    };
    if t == 0.0 {
        return Ok((requested.min(1.0), 0, norm));
    }
    let n_steps = (t / requested).ceil().max(1.0) as usize;
    Ok((t / n_steps as f64, n_steps, norm))
}

/// Run one sweep from `initial`. Fidelity is measured against the lowest
/// even-parity eigenstate at each sample time.
pub fn run_sweep(
    terms: &TermSet,
    base: &ModelParams,
    protocol: &SweepProtocol,
    initial: &StateVector,
) -> Result<SweepOutcome> {
    base.validate()?;
    if initial.basis() != &terms.basis {
        return Err(Error::DimensionMismatch { expected: terms.basis.dim(), found: initial.basis().dim() });
    }
    if (initial.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::Precondition(format!("initial state norm is {}", initial.norm())));
    }
    let (dt, n_steps, max_norm_h) = sweep_time_step(terms, base, protocol)?;
    let stride = protocol
        .sample_stride
        .unwrap_or_else(|| (n_steps / DEFAULT_SAMPLES).max(1))
        .max(1);
    let duration = protocol.duration;
    let kind = protocol.kind;
    let base_copy = *base;
    let h = terms.schedule(move |t| kind.params_at(&base_copy, if duration > 0.0 { t / duration } else { 1.0 }));

    let p0 = parity_expect(initial);
    let mut records = Vec::new();
    let mut max_norm_drift = 0.0f64;
    let mut max_parity_drift = 0.0f64;
    let mut max_fock_tail = 0.0f64;
    let mut psi = initial.clone();
    let basis = terms.basis;

    let mut sample = |t: f64, amps: &[C64]| -> Result<()> {
        let state = StateVector::new(basis, amps.to_vec())?;
        let s = if duration > 0.0 { t / duration } else { 1.0 };
        let params = kind.params_at(base, s.min(1.0));
        let reference = lowest_even_state(terms, &params)?;
        let tail = fock_tail(&state, 2.min(basis.photon_cutoff() + 1))?;
        max_fock_tail = max_fock_tail.max(tail);
        records.push(ObservableRecord {
            t,
            control: kind.control_at(s.min(1.0)),
            fidelity: fidelity(&state, &reference)?,
            photon_number: photon_number(&state),
            s_pi: structure_factor(&state, std::f64::consts::PI, DensityOperator::Occupation),
            parity_expect: parity_expect(&state),
            norm: state.norm(),
        });
        Ok(())
    };

    evolve(&h, psi.amplitudes_mut(), 0.0, dt, n_steps, |step, t, amps| {
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        max_norm_drift = max_norm_drift.max((norm - 1.0).abs());
        let p: f64 = amps
            .iter()
            .enumerate()
            .map(|(i, a)| a.norm_sqr() * basis.parity_of(basis.state_of(i)).sign() as f64)
            .sum();
        max_parity_drift = max_parity_drift.max((p - p0).abs());
        let t = if step == n_steps { duration } else { t };
        if step % stride == 0 || step == n_steps {
            sample(t, amps)?;
        }
        Ok(())
    })?;

    let mut warnings = Vec::new();
    if max_fock_tail > FOCK_TAIL_WARNING {
        warnings.push(format!(
            "population {max_fock_tail:.3e} in the two highest Fock levels exceeds {FOCK_TAIL_WARNING:e}; raise photon_cutoff"
        ));
    }
    Ok(SweepOutcome {
        records,
        dt,
        n_steps,
        max_norm_h,
        max_norm_drift,
        max_parity_drift,
        max_fock_tail,
        warnings,
        final_state: psi,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DurationTrial {
    pub duration: f64,
    pub final_fidelity: f64,
}

/// Doubling schedule for [`choose_duration`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DurationSearch {
    pub start: f64,
    pub max_duration: f64,
    pub tolerance: f64,
}

impl Default for DurationSearch {
    fn default() -> Self {
        Self { start: 10.0, max_duration: 1280.0, tolerance: 0.005 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DurationStudy {
    pub trials: Vec<DurationTrial>,
    pub chosen: f64,
    pub converged: bool,
    pub tolerance: f64,
}

/// Double the sweep time from `search.start` until the final fidelity
/// changes by less than `search.tolerance`, at most up to
/// `search.max_duration`. Trials only sample the end point.
pub fn choose_duration(
    terms: &TermSet,
    base: &ModelParams,
    kind: SweepKind,
    dt: Option<f64>,
    initial: &StateVector,
    search: DurationSearch,
) -> Result<DurationStudy> {
    let DurationSearch { start, max_duration, tolerance } = search;
    if !(start > 0.0) || !(max_duration >= start) {
        return Err(Error::InvalidParameter("duration study needs 0 < start <= max_duration".into()));
    }
    let mut trials: Vec<DurationTrial> = Vec::new();
    let mut duration = start;
    loop {
        let protocol = SweepProtocol { kind, duration, dt, sample_stride: Some(usize::MAX) };
        let out = run_sweep(terms, base, &protocol, initial)?;
        trials.push(DurationTrial { duration, final_fidelity: out.final_fidelity() });
        if let [.., a, b] = trials.as_slice() {
            if (b.final_fidelity - a.final_fidelity).abs() < tolerance {
                return Ok(DurationStudy { chosen: duration, converged: true, trials, tolerance });
            }
        }
        if duration * 2.0 > max_duration * (1.0 + 1e-12) {
            return Ok(DurationStudy { chosen: duration, converged: false, trials, tolerance });
        }
        duration *= 2.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{BasisState, CompositeBasis};
    use crate::hamiltonian::{build_adm_terms, Boundary};
    use crate::sparse::SparseOperator;

    #[test]
    fn stationary_photon_state_picks_up_phase() {
        let b = CompositeBasis::new(2, 3).unwrap();
        let t = build_adm_terms(&b, Boundary::Periodic);
        let h = TimeDependentHamiltonian::constant(t.photon_energy.scaled(0.8));
        let psi0 = StateVector::basis_state(b, BasisState::new(0, 1));
        let mut psi = psi0.clone();
        let dt = 1e-3;
        evolve(&h, psi.amplitudes_mut(), 0.0, dt, 2000, |_, _, _| Ok(())).unwrap();
        let a = psi.amplitudes()[b.vacuum_index(1)];
        let exact = C64::from_polar(1.0, -0.8 * 2.0);
        assert!((a - exact).norm() < 1e-10);
        assert!((fidelity(&psi, &psi0).unwrap() - 1.0).abs() < 1e-10);
        assert!((photon_number(&psi) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rabi_oscillation_matches_closed_form() {
        let omega = 1.3;
        let sx = SparseOperator::from_real_triplets(2, [(0, 1, omega), (1, 0, omega)]);
        let h = TimeDependentHamiltonian::constant(sx);
        let mut psi = vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let t_end = std::f64::consts::FRAC_PI_2 / omega;
        let n = (t_end / 1e-3).round() as usize;
        let dt = t_end / n as f64;
        evolve(&h, &mut psi, 0.0, dt, n, |_, _, _| Ok(())).unwrap();
        // P_excited = sin²(Ωt) = 1 at Ωt = π/2
        assert!((psi[1].norm_sqr() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn fourth_order_convergence() {
        let omega = 1.0;
        let sx = SparseOperator::from_real_triplets(2, [(0, 1, 0.85 * omega), (1, 0, 0.85 * omega), (0, 0, 0.3), (1, 1, -0.2)]);
        let h = TimeDependentHamiltonian::new(vec![("x".into(), sx)], |t| vec![1.0 + 0.5 * t.sin()]);
        let run = |n: usize| {
            let mut psi = vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
            evolve(&h, &mut psi, 0.0, 2.0 / n as f64, n, |_, _, _| Ok(())).unwrap();
            psi
        };
        let reference = run(1600);
        let err = |n: usize| run(n).iter().zip(&reference).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        let ratio = err(50) / err(100);
        assert!((ratio - 16.0).abs() < 3.0, "ratio {ratio}");
    }

    #[test]
    fn nan_amplitudes_abort() {
        let h = TimeDependentHamiltonian::constant(SparseOperator::diagonal(&[f64::NAN, 1.0]));
        let psi = StateVector::basis_state(CompositeBasis::new(1, 0).unwrap(), BasisState::new(0, 0));
        assert!(matches!(rk4_step(&h, &psi, 0.0, 0.1), Err(Error::NumericalBreakdown { .. })));
    }

    fn fig3(alpha: f64) -> ModelParams {
        ModelParams { omega_c_tilde: 1.0, omega_a_tilde: 1.0, v_int: 1.0, omega: 0.0, alpha, boundary: Boundary::Periodic }
    }

    #[test]
    fn sr_start_is_vacuum() {
        let b = CompositeBasis::new(4, 6).unwrap();
        let t = build_adm_terms(&b, Boundary::Periodic);
        let psi = ground_state_initial(&t, &fig3(0.7)).unwrap();
        let vac = StateVector::basis_state(b, BasisState::new(0, 0));
        assert!((fidelity(&psi, &vac).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn degenerate_start_is_rejected() {
        let b = CompositeBasis::new(2, 2).unwrap();
        let t = build_adm_terms(&b, Boundary::Open);
        let mut p = fig3(0.0);
        // vacuum (E=0) and one photon plus one atom (E = 1 + ω_A) with ω_A = −1 are both even
        p.omega_a_tilde = -1.0;
        p.v_int = 5.0;
        assert!(matches!(ground_state_initial(&t, &p), Err(Error::DegenerateGroundState { .. })));
    }

    #[test]
    fn sudden_quench_equals_direct_overlap() {
        let b = CompositeBasis::new(2, 6).unwrap();
        let t = build_adm_terms(&b, Boundary::Periodic);
        let base = fig3(0.7);
        let psi0 = ground_state_initial(&t, &base).unwrap();
        let kind = SweepKind::Sr { omega_final: 1.5 };
        let protocol = SweepProtocol { kind, duration: 0.0, dt: None, sample_stride: None };
        let out = run_sweep(&t, &base, &protocol, &psi0).unwrap();
        let end = lowest_even_state(&t, &kind.params_at(&base, 1.0)).unwrap();
        assert_eq!(out.records.len(), 1);
        assert!((out.final_fidelity() - fidelity(&end, &psi0).unwrap()).abs() < 1e-14);
        assert_eq!(out.records[0].control, 1.5);
    }

    #[test]
    fn explicit_dt_violating_guard_is_rejected() {
        let b = CompositeBasis::new(2, 4).unwrap();
        let t = build_adm_terms(&b, Boundary::Periodic);
        let protocol = SweepProtocol { kind: SweepKind::Sr { omega_final: 1.5 }, duration: 1.0, dt: Some(0.5), sample_stride: None };
        assert!(matches!(sweep_time_step(&t, &fig3(0.7), &protocol), Err(Error::StabilityGuard { .. })));
    }

    #[test]
    fn small_sweep_conserves_norm_and_parity() {
        let b = CompositeBasis::new(2, 8).unwrap();
        let t = build_adm_terms(&b, Boundary::Periodic);
        let base = fig3(0.7);
        let psi0 = ground_state_initial(&t, &base).unwrap();
        let protocol = SweepProtocol { kind: SweepKind::Sr { omega_final: 1.5 }, duration: 20.0, dt: None, sample_stride: None };
        let out = run_sweep(&t, &base, &protocol, &psi0).unwrap();
        assert!(out.max_norm_drift < 1e-8);
        assert!(out.max_parity_drift < 1e-10);
        assert!(out.dt * out.max_norm_h <= STABILITY_LIMIT * (1.0 + 1e-12));
        let first = out.records.first().unwrap();
        let last = out.records.last().unwrap();
        assert_eq!((first.t, last.t), (0.0, 20.0));
        assert!((first.fidelity - 1.0).abs() < 1e-12);
        assert!(out.records.iter().all(|r| r.fidelity <= 1.0 + 1e-10 && r.photon_number >= 0.0));
    }
}
