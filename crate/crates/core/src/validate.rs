//! Numerical checks of the two analytic reductions: elimination of the
//! intermediate level, and the period average of the modulated frame.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::basis::{BasisState, CompositeBasis, Level, ThreeLevelBasis};
use crate::couplings::{bessel_j, effective_couplings, renormalized_frequencies, EngineeringParams};
use crate::dynamics::{evolve, STABILITY_LIMIT};
use crate::error::{Error, Result};
use crate::hamiltonian::{
    build_adm_terms, build_effective_two_level, build_floquet_frame, build_three_level, coupling_quadratures, Boundary,
    InteractionFrame, ThreeLevelFrame, ThreeLevelOptions, TimeDependentHamiltonian,
};

/// Largest coupling-to-detuning ratio accepted by the elimination check.
pub const MAX_PERTURBATIVE_RATIO: f64 = 0.3;
const THREE_LEVEL_DIM_CAP: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationMetrics {
    /// `max_t 1 − |⟨ψ_eff|ψ⟩|²`.
    pub max_overlap_deficit: f64,
    /// Peak population of |m⟩ in the full dynamics (elimination check).
    pub peak_intermediate_population: Option<f64>,
    /// Largest `|‖ψ‖ − 1|` over both propagations.
    pub max_norm_drift: f64,
    pub dt: f64,
    pub n_steps: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub parameter: f64,
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub check: String,
    pub params: EngineeringParams,
    pub v_int: f64,
    pub photon_cutoff: usize,
    pub horizon: f64,
    pub metrics: DeviationMetrics,
    /// Analytic level shift `2|Ω₂|²/Δ₂` neglected by the effective model.
    pub frequency_mismatch: Option<f64>,
    /// Same comparison against the unrotated classical drive.
    pub lab_frame: Option<DeviationMetrics>,
    /// Same comparison keeping the cavity counter-rotating leg at the
    /// configured ω_C (and Ω_e2 in the effective model).
    pub finite_cavity: Option<DeviationMetrics>,
    pub scaling_parameter: String,
    pub scaling: Vec<ScalingRow>,
    pub thresholds: Vec<(String, f64)>,
    pub pass: bool,
}

/// Options of [`validate_sw`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwOptions {
    pub photon_cutoff: usize,
    pub v_int: f64,
    /// Defaults to `10/|Ω_e1|`.
    pub horizon: Option<f64>,
    /// Initial photon number of `|g…g, n⟩`.
    pub initial_photons: usize,
    /// `dt · (fastest rate)`; the stability guard caps it at 0.1. The
    /// default keeps the norm drift of the full propagation below 1e-8.
    pub step_factor: f64,
    pub overlap_threshold: f64,
    pub intermediate_threshold: f64,
    pub lab_frame: bool,
    pub finite_cavity: bool,
    /// Detuning multipliers for the scaling table; empty skips it.
    pub scaling_factors: [f64; 2],
}

impl Default for SwOptions {
    fn default() -> Self {
        Self {
            photon_cutoff: 2,
            v_int: 0.0,
            horizon: None,
            initial_photons: 1,
            step_factor: 0.04,
            overlap_threshold: 0.99,
            intermediate_threshold: 5e-4,
            lab_frame: false,
            finite_cavity: false,
            scaling_factors: [1.0, 2.0],
        }
    }
}

fn check_sw_preconditions(p: &EngineeringParams, o: &SwOptions) -> Result<()> {
    p.validate()?;
    let ratio = p.omega_1.abs().max(p.omega_2.abs()) / p.delta_1.abs().min(p.delta_2.abs());
    if ratio > MAX_PERTURBATIVE_RATIO {
        return Err(Error::Precondition(format!(
            "coupling/detuning ratio {ratio:.3} exceeds {MAX_PERTURBATIVE_RATIO}; the elimination is not perturbative"
        )));
    }
    if p.n_sites > 2 {
        return Err(Error::Precondition(format!("elimination check supports 1 or 2 sites, got {}", p.n_sites)));
    }
    if o.photon_cutoff > 4 {
        return Err(Error::Precondition(format!("elimination check supports photon_cutoff <= 4, got {}", o.photon_cutoff)));
    }
    if o.initial_photons > o.photon_cutoff {
        return Err(Error::InvalidParameter("initial_photons exceeds photon_cutoff".into()));
    }
    if !(o.step_factor > 0.0 && o.step_factor <= STABILITY_LIMIT) {
        return Err(Error::StabilityGuard { dt: o.step_factor, norm: 1.0 });
    }
    Ok(())
}

/// Two-level index → three-level index with g/e kept.
fn embed_map(b2: &CompositeBasis, b3: &ThreeLevelBasis) -> Vec<usize> {
    b2.states()
        .map(|s| {
            let levels: Vec<Level> = (0..b2.n_sites())
                .map(|j| if s.is_excited(j) { Level::Rydberg } else { Level::Ground })
                .collect();
            b3.index_of(&levels, s.photon_n)
        })
        .collect()
}

/// Propagate both Hamiltonians on a common grid and track the overlap
/// deficit after projecting the full state onto the effective subspace.
#[allow(clippy::too_many_arguments)]
fn compare_sw(
    full: &TimeDependentHamiltonian,
    eff: &TimeDependentHamiltonian,
    b2: &CompositeBasis,
    b3: &ThreeLevelBasis,
    initial_photons: usize,
    horizon: f64,
    rate: f64,
    step_factor: f64,
) -> Result<DeviationMetrics> {
    let map = embed_map(b2, b3);
    let mut in_subspace = vec![false; b3.dim()];
    map.iter().for_each(|&i| in_subspace[i] = true);
    let start2 = b2.index_of(BasisState::new(0, initial_photons));
    let mut psi3 = vec![C64::new(0.0, 0.0); b3.dim()];
    psi3[map[start2]] = C64::new(1.0, 0.0);
    let mut psi2 = vec![C64::new(0.0, 0.0); b2.dim()];
    psi2[start2] = C64::new(1.0, 0.0);

    let n_steps = ((horizon * rate / step_factor).ceil() as usize).max(1);
    let dt = horizon / n_steps as f64;
    let mut rk_eff = crate::dynamics::Rk4::new(b2.dim());
    let mut deficit = 0.0f64;
    let mut peak_m = 0.0f64;
    let mut drift = 0.0f64;
    evolve(full, &mut psi3, 0.0, dt, n_steps, |step, t, amps| {
        if step > 0 {
            rk_eff.step(eff, &mut psi2, t - dt, dt)?;
        }
        let kept: f64 = map.iter().map(|&i| amps[i].norm_sqr()).sum();
        let total: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        let m_pop: f64 = amps.iter().zip(&in_subspace).filter(|(_, &k)| !k).map(|(a, _)| a.norm_sqr()).sum();
        let n2: f64 = psi2.iter().map(|a| a.norm_sqr()).sum();
        let ov: C64 = map.iter().zip(&psi2).map(|(&i, b)| b.conj() * amps[i]).sum();
        let f = ov.norm_sqr() / (kept * n2);
        deficit = deficit.max(1.0 - f);
        peak_m = peak_m.max(m_pop);
        drift = drift.max((total.sqrt() - 1.0).abs()).max((n2.sqrt() - 1.0).abs());
        Ok(())
    })?;
    Ok(DeviationMetrics {
        max_overlap_deficit: deficit.max(0.0),
        peak_intermediate_population: Some(peak_m),
        max_norm_drift: drift,
        dt,
        n_steps,
    })
}

/// Variant of the full three-level oracle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum SwOracle {
    /// Rotating classical leg, cavity counter-rotating leg dropped.
    Rotating,
    /// `2Ω₂ cos(ω_p t)` classical leg with ω_p = ω_C.
    Lab,
    /// Rotating classical leg with the `a†|m⟩⟨g|` leg at finite ω_C.
    FiniteCavity,
}

fn sw_run(p: &EngineeringParams, o: &SwOptions, horizon: f64, oracle: SwOracle) -> Result<DeviationMetrics> {
    let n = p.n_sites;
    let b3 = ThreeLevelBasis::new(n, o.photon_cutoff)?;
    let b2 = CompositeBasis::new(n, o.photon_cutoff)?;
    let (e1, e2) = effective_couplings(p)?;
    // each leg carries 1/√N, so the per-site two-photon amplitude is Ω_e/N
    let g_rw = e1 / n as f64;
    let g_crw = if oracle == SwOracle::FiniteCavity { e2 / n as f64 } else { 0.0 };
    let omega_a = p.omega_c_bare + p.delta_1 + p.delta_2;
    let (frame, probe, p3) = if oracle == SwOracle::Lab {
        // Ω₂' cos(ω_p t) becomes Ω₂'/2 after the rotating-wave approximation
        let probe = p.omega_c_bare;
        let mut doubled = *p;
        doubled.omega_2 *= 2.0;
        (ThreeLevelFrame::Lab { probe_freq: probe }, probe, doubled)
    } else {
        (ThreeLevelFrame::Rotating, 0.0, *p)
    };
    let options = ThreeLevelOptions {
        frame,
        interaction: InteractionFrame { reference: p.omega_c_bare, rydberg_shift: probe },
        boundary: Boundary::Periodic,
        cavity_counter_rotating: oracle == SwOracle::FiniteCavity,
        dim_cap: THREE_LEVEL_DIM_CAP,
    };
    let full = build_three_level(&p3, o.v_int, &b3, &options)?;
    let eff_frame = InteractionFrame { reference: p.omega_c_bare, rydberg_shift: 0.0 };
    let eff = build_effective_two_level(
        &b2,
        p.omega_c_bare,
        omega_a,
        o.v_int,
        g_rw,
        g_crw,
        p.drive_amp,
        p.drive_freq,
        eff_frame,
        Boundary::Periodic,
    );
    let mut rate = full.norm_bound(0.0).max(eff.norm_bound(0.0));
    if oracle == SwOracle::FiniteCavity {
        rate = rate.max(2.0 * p.omega_c_bare.abs());
    }
    rate = rate.max(2.0 * probe.abs());
    if p.drive_amp != 0.0 {
        rate = rate.max(p.drive_freq);
    }
    compare_sw(&full, &eff, &b2, &b3, o.initial_photons, horizon, rate, o.step_factor)
}

/// Full three-level dynamics against the eliminated two-level model from
/// `|g…g, n⟩`, in the `ω₁ + ω_C → ∞` limit where the cavity counter-rotating
/// leg drops out. The scaling table multiplies Δ₁ and ω_C by each factor and
/// sets Δ₂ = −Δ₁.
pub fn validate_sw(p: &EngineeringParams, o: &SwOptions) -> Result<ValidationReport> {
    check_sw_preconditions(p, o)?;
    let (e1, _) = effective_couplings(p)?;
    let horizon = match o.horizon {
        Some(h) if !(h > 0.0) => return Err(Error::InvalidParameter(format!("horizon must be positive, got {h}"))),
        Some(h) => h,
        None if e1 != 0.0 => 10.0 / e1.abs(),
        None => 10.0,
    };
    let metrics = sw_run(p, o, horizon, SwOracle::Rotating)?;
    let lab_frame = if o.lab_frame { Some(sw_run(p, o, horizon, SwOracle::Lab)?) } else { None };
    let finite_cavity = if o.finite_cavity { Some(sw_run(p, o, horizon, SwOracle::FiniteCavity)?) } else { None };

    let mut scaling = Vec::new();
    for &f in o.scaling_factors.iter().filter(|f| **f > 0.0) {
        let mut q = *p;
        q.delta_1 = p.delta_1 * f;
        q.delta_2 = -q.delta_1;
        q.omega_c_bare = p.omega_c_bare * f;
        let (qe1, _) = effective_couplings(&q)?;
        let h = if qe1 != 0.0 { 10.0 / qe1.abs() } else { horizon };
        let m = if f == 1.0 && q == *p { metrics } else { sw_run(&q, o, h, SwOracle::Rotating)? };
        scaling.push(ScalingRow { parameter: q.delta_1, deviation: m.max_overlap_deficit });
    }
    let scaling_ok = scaling.windows(2).all(|w| w[1].deviation < w[0].deviation || w[0].deviation < 1e-12);
    let peak = metrics.peak_intermediate_population.unwrap_or(0.0);
    let pass = peak < o.intermediate_threshold && 1.0 - metrics.max_overlap_deficit >= o.overlap_threshold && scaling_ok;
    Ok(ValidationReport {
        check: "schrieffer_wolff".into(),
        params: *p,
        v_int: o.v_int,
        photon_cutoff: o.photon_cutoff,
        horizon,
        metrics,
        frequency_mismatch: Some(2.0 * p.omega_2 * p.omega_2 / p.delta_2),
        lab_frame,
        finite_cavity,
        scaling_parameter: "delta_1".into(),
        scaling,
        thresholds: vec![
            ("min_overlap".into(), o.overlap_threshold),
            ("peak_intermediate_population".into(), o.intermediate_threshold),
        ],
        pass,
    })
}

/// Options of [`validate_floquet`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FloquetOptions {
    /// `(Ω_e1, Ω_e2)`; derived from the engineering parameters when absent.
    pub omega_e: Option<(f64, f64)>,
    pub v_int: f64,
    pub photon_cutoff: usize,
    pub n_periods: usize,
    pub initial_photons: usize,
    pub step_factor: f64,
    /// Pass threshold on the stroboscopic infidelity.
    pub deviation_threshold: f64,
    /// Required ratio of the deviations at 2ω_s and ω_s.
    pub scaling_ratio: f64,
}

impl Default for FloquetOptions {
    fn default() -> Self {
        Self {
            omega_e: None,
            v_int: 1.0,
            photon_cutoff: 3,
            n_periods: 50,
            initial_photons: 1,
            step_factor: STABILITY_LIMIT,
            deviation_threshold: 0.05,
            scaling_ratio: 0.7,
        }
    }
}

/// Period-averaged static Hamiltonian of [`build_floquet_frame`].
pub fn floquet_static(
    p: &EngineeringParams,
    omega_e1: f64,
    omega_e2: f64,
    v_int: f64,
    basis: &CompositeBasis,
    boundary: Boundary,
) -> Result<TimeDependentHamiltonian> {
    let terms = build_adm_terms(basis, boundary);
    let (rw_y, crw_y) = coupling_quadratures(basis);
    let (wc, wa) = renormalized_frequencies(p);
    let root_n = (basis.n_sites() as f64).sqrt();
    let k = p.drive_ratio();
    let g_rw = omega_e1 / root_n * bessel_j(0, k)?;
    let g_crw = omega_e2 / root_n * bessel_j(2 * p.sideband, k)?;
    let ops = vec![
        ("photon_energy".to_string(), terms.photon_energy),
        ("atom_number".to_string(), terms.atom_number),
        ("rydberg".to_string(), terms.rydberg),
        ("rw_x".to_string(), terms.rw),
        ("rw_y".to_string(), rw_y),
        ("crw_x".to_string(), terms.crw),
        ("crw_y".to_string(), crw_y),
    ];
    Ok(TimeDependentHamiltonian::new(ops, move |_| vec![wc, wa, v_int, g_rw, 0.0, g_crw, 0.0]))
}

fn floquet_run(p: &EngineeringParams, o: &FloquetOptions) -> Result<DeviationMetrics> {
    let (e1, e2) = match o.omega_e {
        Some(e) => e,
        None => effective_couplings(p)?,
    };
    let basis = CompositeBasis::new(p.n_sites, o.photon_cutoff)?;
    let exact = build_floquet_frame(p, e1, e2, o.v_int, &basis, Boundary::Periodic)?;
    let stat = floquet_static(p, e1, e2, o.v_int, &basis, Boundary::Periodic)?;
    let k = p.drive_ratio().abs();
    let rate = exact
        .norm_bound(0.0)
        .max(stat.norm_bound(0.0))
        .max((k + 2.0 * p.sideband as f64) * p.drive_freq);
    let period = 2.0 * std::f64::consts::PI / p.drive_freq;
    let per_period = ((period * rate / o.step_factor).ceil() as usize).max(1);
    let dt = period / per_period as f64;
    let n_steps = per_period * o.n_periods;

    let start = basis.index_of(BasisState::new(0, o.initial_photons));
    let mut psi = vec![C64::new(0.0, 0.0); basis.dim()];
    psi[start] = C64::new(1.0, 0.0);
    let mut phi = psi.clone();
    let mut rk = crate::dynamics::Rk4::new(basis.dim());
    let mut deficit = 0.0f64;
    let mut drift = 0.0f64;
    evolve(&exact, &mut psi, 0.0, dt, n_steps, |step, t, amps| {
        if step > 0 {
            rk.step(&stat, &mut phi, t - dt, dt)?;
        }
        if step % per_period == 0 {
            let ov: C64 = phi.iter().zip(amps).map(|(b, a)| b.conj() * a).sum();
            let na: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
            let nb: f64 = phi.iter().map(|a| a.norm_sqr()).sum();
            deficit = deficit.max(1.0 - ov.norm_sqr() / (na * nb));
            drift = drift.max((na.sqrt() - 1.0).abs()).max((nb.sqrt() - 1.0).abs());
        }
        Ok(())
    })?;
    Ok(DeviationMetrics {
        max_overlap_deficit: deficit.max(0.0),
        peak_intermediate_population: None,
        max_norm_drift: drift,
        dt,
        n_steps,
    })
}

/// Exact modulated-frame propagation against its period average, compared
/// stroboscopically. The scaling row doubles ω_s at fixed A/ω_s and fixed
/// renormalized frequencies.
pub fn validate_floquet(p: &EngineeringParams, o: &FloquetOptions) -> Result<ValidationReport> {
    p.validate()?;
    if p.n_sites > 3 || o.photon_cutoff > 4 {
        return Err(Error::Precondition("Floquet check supports at most 3 sites and photon_cutoff <= 4".into()));
    }
    if o.n_periods == 0 {
        return Err(Error::InvalidParameter("n_periods must be positive".into()));
    }
    if o.initial_photons > o.photon_cutoff {
        return Err(Error::InvalidParameter("initial_photons exceeds photon_cutoff".into()));
    }
    if !(o.step_factor > 0.0 && o.step_factor <= STABILITY_LIMIT) {
        return Err(Error::StabilityGuard { dt: o.step_factor, norm: 1.0 });
    }
    let metrics = floquet_run(p, o)?;
    let (wc, wa) = renormalized_frequencies(p);
    let mut q = *p;
    q.drive_freq *= 2.0;
    q.drive_amp *= 2.0;
    let shift = q.sideband as f64 * q.drive_freq;
    q.omega_c_bare = wc + shift;
    q.omega_a_bare = wa + shift;
    let doubled = floquet_run(&q, o)?;
    let scaling = vec![
        ScalingRow { parameter: p.drive_freq, deviation: metrics.max_overlap_deficit },
        ScalingRow { parameter: q.drive_freq, deviation: doubled.max_overlap_deficit },
    ];
    let scaling_ok = doubled.max_overlap_deficit <= o.scaling_ratio * metrics.max_overlap_deficit
        || metrics.max_overlap_deficit < 1e-10;
    let pass = metrics.max_overlap_deficit <= o.deviation_threshold && scaling_ok;
    Ok(ValidationReport {
        check: "floquet_magnus".into(),
        params: *p,
        v_int: o.v_int,
        photon_cutoff: o.photon_cutoff,
        horizon: o.n_periods as f64 * 2.0 * std::f64::consts::PI / p.drive_freq,
        metrics,
        frequency_mismatch: None,
        lab_frame: None,
        finite_cavity: None,
        scaling_parameter: "drive_freq".into(),
        scaling,
        thresholds: vec![
            ("max_infidelity".into(), o.deviation_threshold),
            ("scaling_ratio".into(), o.scaling_ratio),
        ],
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sw_params(delta: f64) -> EngineeringParams {
        EngineeringParams {
            omega_1: 1.0,
            omega_2: 1.0,
            delta_1: delta,
            delta_2: -delta,
            drive_amp: 0.0,
            drive_freq: 1.0,
            sideband: 0,
            omega_c_bare: 10.0 * delta,
            omega_a_bare: 10.0 * delta,
            n_sites: 1,
        }
    }

    #[test]
    fn strong_coupling_is_refused() {
        let mut p = sw_params(10.0);
        p.omega_1 = 5.0;
        assert!(matches!(validate_sw(&p, &SwOptions::default()), Err(Error::Precondition(_))));
    }

    #[test]
    fn zero_cavity_coupling_is_trivial() {
        let mut p = sw_params(20.0);
        p.omega_1 = 0.0;
        let o = SwOptions { horizon: Some(5.0), scaling_factors: [0.0, 0.0], ..SwOptions::default() };
        let r = validate_sw(&p, &o).unwrap();
        assert!(r.metrics.max_overlap_deficit < 1e-12);
        assert_eq!(r.metrics.peak_intermediate_population, Some(0.0));
    }

    #[test]
    fn undriven_floquet_frame_is_static() {
        let p = EngineeringParams {
            omega_1: 1.0,
            omega_2: 1.0,
            delta_1: 10.0,
            delta_2: -10.0,
            drive_amp: 0.0,
            drive_freq: 20.0,
            sideband: 0,
            omega_c_bare: 1.0,
            omega_a_bare: 1.0,
            n_sites: 2,
        };
        let o = FloquetOptions { omega_e: Some((0.2, 0.1)), n_periods: 5, ..FloquetOptions::default() };
        let r = validate_floquet(&p, &o).unwrap();
        assert!(r.metrics.max_overlap_deficit < 1e-10);
        assert!(r.metrics.max_norm_drift < 1e-8);
    }
}
