mod common;

use adm_core::basis::{BasisState, CompositeBasis, Parity};
use adm_core::dynamics::{run_sweep, SweepKind, SweepProtocol};
use adm_core::hamiltonian::{assemble, build_adm_terms, Boundary};
use adm_core::linalg::eigenvalues;
use adm_core::observables::excitation_number;
use adm_core::spectra::{eigenpairs_in_sector, sector_spectrum};
use adm_core::state::StateVector;
use num_complex::Complex64 as C64;

#[test]
fn two_site_matrix_matches_hand_enumeration() {
    let b = CompositeBasis::new(2, 1).unwrap();
    let terms = build_adm_terms(&b, Boundary::Periodic);
    for p in [
        common::params(1.0, 1.0, 1.0, 0.8, 0.0),
        common::params(0.7, -0.3, 2.0, 1.3, 0.4),
        common::params(1.1, 0.2, 0.5, 0.9, 1.0),
    ] {
        let dense = assemble(&terms, &p).unwrap().to_dense();
        let hand = common::hand_matrix_n2(&p);
        for i in 0..8 {
            for j in 0..8 {
                assert!((dense[i][j] - C64::new(hand[i][j], 0.0)).norm() < 1e-14, "({i},{j}) for {p:?}");
            }
        }
    }
}

#[test]
fn sector_spectra_union_equals_full_spectrum() {
    let b = CompositeBasis::new(3, 3).unwrap();
    let h = assemble(&build_adm_terms(&b, Boundary::Periodic), &common::params(1.0, 0.6, 1.0, 1.1, 0.35)).unwrap();
    let mut union: Vec<f64> = Parity::both().iter().flat_map(|&p| sector_spectrum(&h, &b, p).unwrap()).collect();
    union.sort_by(f64::total_cmp);
    let mut dense: Vec<f64> = h.to_dense().into_iter().flatten().map(|z| z.re).collect();
    let full = eigenvalues(&mut dense, b.dim()).unwrap();
    assert_eq!(union.len(), full.len());
    for (a, e) in union.iter().zip(&full) {
        assert!((a - e).abs() < 1e-10);
    }
}

#[test]
fn sector_eigenvectors_satisfy_the_eigen_equation() {
    let b = CompositeBasis::new(4, 5).unwrap();
    let h = assemble(&build_adm_terms(&b, Boundary::Open), &common::params(1.0, 1.0, 1.0, 0.9, 0.7)).unwrap();
    for parity in Parity::both() {
        let sol = eigenpairs_in_sector(&h, &b, parity, 4).unwrap();
        for l in 0..4 {
            let v = sol.embed(l);
            let hv = h.apply(&v);
            let res: f64 = hv.iter().zip(&v).map(|(a, x)| (a - x * sol.eigenvalues[l]).norm_sqr()).sum::<f64>().sqrt();
            assert!(res < 1e-10);
        }
    }
}

#[test]
fn rotating_sweep_conserves_excitation_number() {
    let b = CompositeBasis::new(3, 6).unwrap();
    let terms = build_adm_terms(&b, Boundary::Periodic);
    let base = common::params(1.0, 1.0, 1.0, 0.0, 0.0);
    let initial = StateVector::superposition(
        b,
        &[(BasisState::new(0b001, 2), C64::new(0.6, 0.0)), (BasisState::new(0b011, 1), C64::new(0.0, 0.8))],
    )
    .unwrap();
    let n0 = excitation_number(&initial);
    let protocol = SweepProtocol { kind: SweepKind::Sr { omega_final: 1.5 }, duration: 15.0, dt: None, sample_stride: None };
    let out = run_sweep(&terms, &base, &protocol, &initial).unwrap();
    assert!((n0 - 3.0).abs() < 1e-14);
    // RK4 is a polynomial in H, so it commutes with N_exc up to the norm loss
    let n1 = excitation_number(&out.final_state) / out.final_state.norm().powi(2);
    assert!((n1 - n0).abs() < 1e-10, "{n1} vs {n0}");
}
