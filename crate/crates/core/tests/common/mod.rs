#![allow(dead_code)]

use adm_core::hamiltonian::{Boundary, ModelParams};

/// Ascending power series for J_n, summed until terms vanish.
pub fn bessel_series(n: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = half.powi(n as i32) / (1..=n).map(f64::from).product::<f64>();
    let mut sum = term;
    for k in 1..200u32 {
        term *= -half * half / (f64::from(k) * f64::from(k + n));
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

pub fn params(omega_c: f64, omega_a: f64, v: f64, omega: f64, alpha: f64) -> ModelParams {
    ModelParams { omega_c_tilde: omega_c, omega_a_tilde: omega_a, v_int: v, omega, alpha, boundary: Boundary::Periodic }
}

/// Static model for N = 2, n_max = 1 written out entry by entry.
/// Ordering: (spins, n) → 2·spins + n with bit j of `spins` = site j.
pub fn hand_matrix_n2(p: &ModelParams) -> [[f64; 8]; 8] {
    let (wc, wa, v) = (p.omega_c_tilde, p.omega_a_tilde, p.v_int);
    let g1 = (1.0 - p.alpha) * p.omega / 2f64.sqrt();
    let g2 = p.alpha * p.omega / 2f64.sqrt();
    let mut h = [[0.0; 8]; 8];
    let diag = [0.0, wc, wa, wa + wc, wa, wa + wc, 2.0 * wa + v, 2.0 * wa + v + wc];
    for (i, d) in diag.iter().enumerate() {
        h[i][i] = *d;
    }
    // σ⁺_j a: |00,1⟩→|01,0⟩, |00,1⟩→|10,0⟩, |01,1⟩→|11,0⟩, |10,1⟩→|11,0⟩
    for (a, b) in [(1, 2), (1, 4), (3, 6), (5, 6)] {
        h[a][b] = g1;
        h[b][a] = g1;
    }
    // σ⁺_j a†: |00,0⟩→|01,1⟩, |00,0⟩→|10,1⟩, |01,0⟩→|11,1⟩, |10,0⟩→|11,1⟩
    for (a, b) in [(0, 3), (0, 5), (2, 7), (4, 7)] {
        h[a][b] = g2;
        h[b][a] = g2;
    }
    h
}
