//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test --test acceptance`.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use adm_core::basis::{BasisState, CompositeBasis, Parity};
use adm_core::cli::{coupling_table, ratio_grid};
use adm_core::couplings::{bessel_j, EngineeringParams};
use adm_core::dynamics::{
    choose_duration, evolve, ground_state_initial, run_sweep, DurationSearch, SweepKind, SweepProtocol,
};
use adm_core::hamiltonian::{
    assemble, build_adm_terms, excitation_operator, parity_operator, Boundary, ModelParams, TermSet,
    TimeDependentHamiltonian,
};
use adm_core::linalg::eigenvalues;
use adm_core::observables::{structure_factor, DensityOperator};
use adm_core::sparse::commutator_max_abs;
use adm_core::spectra::{
    classify_gap, min_gap, refine_gap, sector_spectrum, sector_width, spectral_flow, spectral_norm, Control,
    ControlGrid, GapKind, GapPoint,
};
use adm_core::state::StateVector;
use adm_core::validate::{validate_floquet, validate_sw, FloquetOptions, SwOptions};
use num_complex::Complex64 as C64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Outcome = Result<(bool, String), String>;
type Check = fn() -> Outcome;

/// First zero of J₀.
const J0_ZERO: f64 = 2.404_825_557_695_773;
const FLOW_POINTS: usize = 151;

fn chain(n_sites: usize, cutoff: usize) -> TermSet {
    let b = CompositeBasis::new(n_sites, cutoff).expect("basis");
    build_adm_terms(&b, Boundary::Periodic)
}

fn criterion_1() -> Outcome {
    let (e1, e2) = (2.0, 1.0);
    let coarse = coupling_table(e1, e2, 1, 1, &ratio_grid(0.0, 5.0, 0.01).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let origin_ok = coarse[0].omega_e3 == 2.0 && coarse[0].omega_e4 == 0.0;
    let fine = coupling_table(e1, e2, 1, 1, &ratio_grid(2.395, 2.415, 1e-4).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let best = fine
        .iter()
        .filter(|r| (r.a_over_ws - J0_ZERO).abs() <= 1e-3)
        .map(|r| r.ratio_crw_rw)
        .fold(0.0, f64::max);
    let mut bessel_err = 0.0f64;
    for row in &coarse {
        let x = row.a_over_ws;
        for order in [0, 2] {
            let v = bessel_j(order, x).map_err(|e| e.to_string())?;
            bessel_err = bessel_err.max((v - common::bessel_series(order, x)).abs());
        }
        bessel_err = bessel_err.max((row.omega_e3 - e1 * common::bessel_series(0, x)).abs() / e1);
        bessel_err = bessel_err.max((row.omega_e4 - e2 * common::bessel_series(2, x)).abs() / e2);
    }
    let pass = origin_ok && best > 1e3 && bessel_err < 1e-10;
    Ok((
        pass,
        format!(
            "Ω_e3(0)={}, Ω_e4(0)={}, max CRW/RW within 1e-3 of {J0_ZERO:.5} = {best:.3e} (> 1e3), Bessel err {bessel_err:.1e} (< 1e-10)",
            coarse[0].omega_e3, coarse[0].omega_e4
        ),
    ))
}

fn criterion_2() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let (mut worst_p, mut worst_n0, mut min_rel_n) = (0.0f64, 0.0f64, f64::INFINITY);
    for _ in 0..20 {
        let n = rng.gen_range(2..=4);
        let cutoff = rng.gen_range(1..=3);
        let b = CompositeBasis::new(n, cutoff).map_err(|e| e.to_string())?;
        let boundary = if rng.gen_bool(0.5) { Boundary::Periodic } else { Boundary::Open };
        let terms = build_adm_terms(&b, boundary);
        let mut p = common::params(
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(0.0..2.0),
            rng.gen_range(0.2..2.0),
            rng.gen_range(0.0..=1.0),
        );
        p.boundary = boundary;
        let parity = parity_operator(&b);
        let exc = excitation_operator(&b);
        let h = assemble(&terms, &p).map_err(|e| e.to_string())?;
        worst_p = worst_p.max(commutator_max_abs(&h, &parity).map_err(|e| e.to_string())?);
        let h0 = assemble(&terms, &ModelParams { alpha: 0.0, ..p }).map_err(|e| e.to_string())?;
        worst_p = worst_p.max(commutator_max_abs(&h0, &parity).map_err(|e| e.to_string())?);
        worst_n0 = worst_n0.max(commutator_max_abs(&h0, &exc).map_err(|e| e.to_string())?);
        let h5 = assemble(&terms, &ModelParams { alpha: 0.5, ..p }).map_err(|e| e.to_string())?;
        let c5 = commutator_max_abs(&h5, &exc).map_err(|e| e.to_string())?;
        min_rel_n = min_rel_n.min(c5 / h5.max_abs());
    }
    let pass = worst_p < 1e-12 && worst_n0 < 1e-12 && min_rel_n > 1e-3;
    Ok((
        pass,
        format!("max‖[H,P]‖={worst_p:.1e}, max‖[H,N]‖(α=0)={worst_n0:.1e}, min ‖[H,N]‖/‖H‖(α=0.5)={min_rel_n:.3}"),
    ))
}

fn criterion_3() -> Outcome {
    let b = CompositeBasis::new(2, 1).map_err(|e| e.to_string())?;
    let terms = build_adm_terms(&b, Boundary::Periodic);
    let p = common::params(0.9, -0.4, 1.3, 1.1, 0.35);
    let dense = assemble(&terms, &p).map_err(|e| e.to_string())?.to_dense();
    let hand = common::hand_matrix_n2(&p);
    let mut entry_err = 0.0f64;
    for i in 0..8 {
        for j in 0..8 {
            entry_err = entry_err.max((dense[i][j] - C64::new(hand[i][j], 0.0)).norm());
        }
    }
    let b3 = CompositeBasis::new(3, 3).map_err(|e| e.to_string())?;
    let h = assemble(&build_adm_terms(&b3, Boundary::Periodic), &common::params(1.0, 0.6, 1.0, 1.1, 0.35))
        .map_err(|e| e.to_string())?;
    let mut union = Vec::new();
    for parity in Parity::both() {
        union.extend(sector_spectrum(&h, &b3, parity).map_err(|e| e.to_string())?);
    }
    union.sort_by(f64::total_cmp);
    let mut full_dense: Vec<f64> = h.to_dense().into_iter().flatten().map(|z| z.re).collect();
    let full = eigenvalues(&mut full_dense, b3.dim()).map_err(|e| e.to_string())?;
    let spec_err = union.iter().zip(&full).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let pass = entry_err < 1e-14 && spec_err < 1e-10 && union.len() == full.len();
    Ok((pass, format!("8×8 max entry err {entry_err:.1e} (< 1e-14), sector-union spectrum err {spec_err:.1e} (< 1e-10)")))
}

/// Lowest even pair: coarse flow minimum refined by golden section, plus the
/// smallest coarse gap.
fn even_gap(terms: &TermSet, base: &ModelParams, grid: ControlGrid) -> Result<(GapPoint, GapKind), String> {
    let flow = spectral_flow(terms, base, &grid, 2, &[Parity::Even]).map_err(|e| e.to_string())?;
    let coarse = min_gap(&flow, Parity::Even, (0, 1)).map_err(|e| e.to_string())?;
    let refined = refine_gap(terms, base, &flow, Parity::Even, (0, 1), coarse, 1e-12).map_err(|e| e.to_string())?;
    Ok((refined, classify_gap(refined.gap, sector_width(&flow, Parity::Even))))
}

fn criterion_4() -> Outcome {
    let terms = chain(6, 40);
    let grid = ControlGrid { control: Control::Coupling, start: 0.0, end: 1.5, points: FLOW_POINTS };
    let (g0, k0) = even_gap(&terms, &common::params(1.0, 1.0, 1.0, 0.0, 0.0), grid)?;
    let (g7, _) = even_gap(&terms, &common::params(1.0, 1.0, 1.0, 0.0, 0.7), grid)?;
    let pass = g0.gap < 1e-6 && g0.control > 0.0 && g0.control < 1.5 && g7.gap > 0.01;
    Ok((
        pass,
        format!(
            "α=0 refined gap {:.2e} at Ω={:.6} ({k0:?}); α=0.7 min gap {:.4} at Ω={:.4} (> 0.01)",
            g0.gap, g0.control, g7.gap, g7.control
        ),
    ))
}

struct PreparedSweep {
    fidelity: f64,
    duration: f64,
    trials: usize,
    norm_drift: f64,
    parity_drift: f64,
    s_pi: (f64, f64),
}

fn prepare(terms: &TermSet, base: &ModelParams, kind: SweepKind, duration: Option<f64>) -> Result<PreparedSweep, String> {
    let initial = ground_state_initial(terms, &kind.params_at(base, 0.0)).map_err(|e| e.to_string())?;
    let (duration, trials) = match duration {
        Some(t) => (t, 0),
        None => {
            let study = choose_duration(terms, base, kind, None, &initial, DurationSearch::default())
                .map_err(|e| e.to_string())?;
            (study.chosen, study.trials.len())
        }
    };
    // drifts are tracked every step; only the end point needs a reference eigenstate
    let protocol = SweepProtocol { kind, duration, dt: None, sample_stride: Some(usize::MAX) };
    let out = run_sweep(terms, base, &protocol, &initial).map_err(|e| e.to_string())?;
    let s0 = structure_factor(&initial, std::f64::consts::PI, DensityOperator::Occupation);
    let s1 = out.records.last().map_or(f64::NAN, |r| r.s_pi);
    Ok(PreparedSweep {
        fidelity: out.final_fidelity(),
        duration,
        trials,
        norm_drift: out.max_norm_drift,
        parity_drift: out.max_parity_drift,
        s_pi: (s0, s1),
    })
}

fn criterion_5() -> Outcome {
    let terms = chain(6, 40);
    let kind = SweepKind::Sr { omega_final: 1.5 };
    let good = prepare(&terms, &common::params(1.0, 1.0, 1.0, 0.0, 0.7), kind, None)?;
    let bad = prepare(&terms, &common::params(1.0, 1.0, 1.0, 0.0, 0.0), kind, Some(good.duration))?;
    let pass = good.fidelity >= 0.95
        && good.norm_drift < 1e-8
        && good.parity_drift < 1e-6
        && bad.fidelity <= good.fidelity - 0.2;
    Ok((
        pass,
        format!(
            "T={} after {} trials: F(α=0.7)={:.4} (≥ 0.95), F(α=0)={:.4}, norm drift {:.1e}, parity drift {:.1e}",
            good.duration, good.trials, good.fidelity, bad.fidelity, good.norm_drift, good.parity_drift
        ),
    ))
}

fn criterion_6() -> Outcome {
    let terms = chain(6, 40);
    let kind = SweepKind::Srs { omega_a_start: 0.5, omega_a_end: -0.1 };
    let base = common::params(1.0, 0.5, 1.0, 0.6, 0.3);
    let run = prepare(&terms, &base, kind, None)?;
    let rise = run.s_pi.1 - run.s_pi.0;
    let grid = ControlGrid { control: Control::AtomFrequency, start: 0.5, end: -0.1, points: FLOW_POINTS };
    let (g0, k0) = even_gap(&terms, &ModelParams { alpha: 0.0, ..base }, grid)?;
    let pass = run.fidelity >= 0.9 && rise > 0.05 && g0.gap < 1e-6;
    Ok((
        pass,
        format!(
            "T={}: F={:.4} (≥ 0.9), S(π)/N {:.4} → {:.4} (rise {rise:.4} > 0.05); α=0 refined gap {:.2e} at ω̃_A={:.6} ({k0:?})",
            run.duration, run.fidelity, run.s_pi.0, run.s_pi.1, g0.gap, g0.control
        ),
    ))
}

fn criterion_7() -> Outcome {
    let p = EngineeringParams {
        omega_1: 1.0,
        omega_2: 1.0,
        delta_1: 100.0,
        delta_2: -100.0,
        drive_amp: 0.0,
        drive_freq: 1.0,
        sideband: 0,
        omega_c_bare: 1000.0,
        omega_a_bare: 1000.0,
        n_sites: 1,
    };
    let r = validate_sw(&p, &SwOptions::default()).map_err(|e| e.to_string())?;
    let peak = r.metrics.peak_intermediate_population.unwrap_or(f64::NAN);
    let overlap = 1.0 - r.metrics.max_overlap_deficit;
    let decreasing = r.scaling.len() == 2 && r.scaling[1].deviation < r.scaling[0].deviation;
    let pass = peak < 5e-4 && overlap >= 0.99 && decreasing;
    Ok((
        pass,
        format!(
            "peak |m⟩ {peak:.2e} (< 5e-4), min overlap {overlap:.6} (≥ 0.99), deficit {:.2e} → {:.2e} when Δ₁ doubles",
            r.scaling.first().map_or(f64::NAN, |s| s.deviation),
            r.scaling.get(1).map_or(f64::NAN, |s| s.deviation)
        ),
    ))
}

fn criterion_8() -> Outcome {
    let ws = 50.0;
    let p = EngineeringParams {
        omega_1: 1.0,
        omega_2: 1.0,
        delta_1: 10.0,
        delta_2: -10.0,
        drive_amp: ws,
        drive_freq: ws,
        sideband: 1,
        omega_c_bare: 1.0 + ws,
        omega_a_bare: 1.0 + ws,
        n_sites: 2,
    };
    let o = FloquetOptions { omega_e: Some((0.2, 0.1)), ..FloquetOptions::default() };
    let r = validate_floquet(&p, &o).map_err(|e| e.to_string())?;
    let (d50, d100) = (r.scaling[0].deviation, r.scaling[1].deviation);
    let pass = d100 <= 0.7 * d50;
    Ok((pass, format!("infidelity {d50:.2e} at ω_s=50, {d100:.2e} at ω_s=100, ratio {:.3} (≤ 0.7)", d100 / d50)))
}

fn criterion_9() -> Outcome {
    let terms = chain(6, 40);
    let p = common::params(1.0, 1.0, 1.0, 1.0, 0.7);
    let h_static = assemble(&terms, &p).map_err(|e| e.to_string())?;
    let norm = spectral_norm(&h_static, &terms.basis).map_err(|e| e.to_string())?;
    let h = TimeDependentHamiltonian::constant(h_static);
    // start from the uncoupled ground state so the quench populates many levels
    let start = StateVector::basis_state(terms.basis, BasisState::new(0, 0));
    let horizon = 2.0;
    let run = |n: usize| -> Result<Vec<C64>, String> {
        let mut psi = start.amplitudes().to_vec();
        evolve(&h, &mut psi, 0.0, horizon / n as f64, n, |_, _, _| Ok(())).map_err(|e| e.to_string())?;
        Ok(psi)
    };
    // dt·‖H‖ ≈ 1 at the coarsest step
    let n0 = (horizon * norm).ceil() as usize;
    let reference = run(8 * n0)?;
    let mut errors = Vec::new();
    for m in [1, 2, 4] {
        let psi = run(m * n0)?;
        errors.push(psi.iter().zip(&reference).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt());
    }
    let r1 = errors[0] / errors[1];
    let r2 = errors[1] / errors[2];
    let ok = |r: f64| (8.0..=32.0).contains(&r);
    Ok((
        ok(r1) && ok(r2),
        format!(
            "dt={:.3e}: errors {:.2e}, {:.2e}, {:.2e}; ratios {r1:.2}, {r2:.2} (16 within ×2)",
            horizon / n0 as f64,
            errors[0],
            errors[1],
            errors[2]
        ),
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 9] = [
        ("coupling engineering", criterion_1),
        ("symmetry suite", criterion_2),
        ("brute-force equivalence", criterion_3),
        ("SR spectral flow", criterion_4),
        ("adiabatic SR preparation", criterion_5),
        ("SRS preparation", criterion_6),
        ("elimination oracle", criterion_7),
        ("Floquet-Magnus oracle", criterion_8),
        ("integrator order", criterion_9),
    ];
    let only: Option<usize> = std::env::var("ADM_CRITERION").ok().and_then(|s| s.parse().ok());
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = i + 1;
        if only.is_some_and(|k| k != id) {
            continue;
        }
        let start = Instant::now();
        let (pass, detail) = check().unwrap_or_else(|e| (false, format!("error: {e}")));
        let secs = start.elapsed().as_secs_f64();
        println!("criterion {id} [{name}]: {} | {detail} | {secs:.1}s", if pass { "PASS" } else { "FAIL" });
        if !pass {
            failures += 1;
        }
    }
    if failures == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
