//! Coupling constants of the engineering chain
//! (Ω₁, Ω₂, Δ₁, Δ₂) → (Ω_e1, Ω_e2) → (Ω_e3, Ω_e4) → (Ω, α).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest |x| evaluated with the ascending series; beyond it the series
/// loses digits to cancellation and Miller's backward recurrence takes over.
const SERIES_LIMIT: f64 = 8.0;

/// Physical parameters of the driven three-level scheme.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineeringParams {
    /// Cavity-leg coupling Ω₁.
    pub omega_1: f64,
    /// Classical-laser Rabi frequency Ω₂.
    pub omega_2: f64,
    /// Δ₁ = ω₁ − ω_C.
    pub delta_1: f64,
    /// Δ₂ = ω₂ − ω_p.
    pub delta_2: f64,
    /// Microwave modulation amplitude A.
    pub drive_amp: f64,
    /// Modulation angular frequency ω_s.
    pub drive_freq: f64,
    /// Resolved side-band index n_t.
    pub sideband: u32,
    /// Bare cavity frequency ω_C.
    pub omega_c_bare: f64,
    /// Bare atomic frequency ω_A = ω₁ + Δ₂.
    pub omega_a_bare: f64,
    pub n_sites: usize,
}

impl EngineeringParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            (self.omega_1, "omega_1"),
            (self.omega_2, "omega_2"),
            (self.delta_1, "delta_1"),
            (self.delta_2, "delta_2"),
            (self.drive_amp, "drive_amp"),
            (self.drive_freq, "drive_freq"),
            (self.omega_c_bare, "omega_c_bare"),
            (self.omega_a_bare, "omega_a_bare"),
        ];
        for (v, name) in finite {
            if !v.is_finite() {
                return Err(Error::NonFinite(name));
            }
        }
        if self.delta_1 == 0.0 {
            return Err(Error::ZeroDetuning("delta_1"));
        }
        if self.delta_2 == 0.0 {
            return Err(Error::ZeroDetuning("delta_2"));
        }
        if self.drive_freq <= 0.0 {
            return Err(Error::InvalidParameter("drive_freq must be positive".into()));
        }
        if self.n_sites == 0 {
            return Err(Error::InvalidParameter("n_sites must be at least 1".into()));
        }
        Ok(())
    }

    /// A/ω_s, the argument of every Bessel factor.
    pub fn drive_ratio(&self) -> f64 {
        self.drive_amp / self.drive_freq
    }
}

/// Parameters of the anisotropic model: magnitudes of the rotating and
/// counter-rotating couplings, and their (Ω, α) parametrization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdmCouplings {
    pub rw: f64,
    pub crw: f64,
    pub omega_mean: f64,
    pub alpha: f64,
    /// Signs of the input couplings. A sign flip of either coupling is a
    /// gauge choice (rotate σ⁺ and a by i) and leaves spectra unchanged.
    pub rw_sign: f64,
    pub crw_sign: f64,
}

impl AdmCouplings {
    /// Coefficients `((1−α)Ω/√N, αΩ/√N)` multiplying the rotating and
    /// counter-rotating sums of the static model.
    pub fn model_coefficients(&self, n_sites: usize) -> (f64, f64) {
        let scale = self.omega_mean / (n_sites as f64).sqrt();
        ((1.0 - self.alpha) * scale, self.alpha * scale)
    }
}

/// Bessel function of the first kind of integer order.
pub fn bessel_j(order: u32, x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::NonFinite("bessel argument"));
    }
    let value = if x.abs() <= SERIES_LIMIT {
        bessel_series(order, x.abs())
    } else {
        bessel_miller(order, x.abs())
    };
    // J_n(-x) = (-1)^n J_n(x)
    Ok(if x < 0.0 && order % 2 == 1 { -value } else { value })
}

fn bessel_series(order: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = 1.0;
    for k in 1..=order {
        term *= half / k as f64;
    }
    if term == 0.0 {
        return 0.0;
    }
    let q = half * half;
    let mut sum = term;
    let mut k = 0u32;
    loop {
        k += 1;
        term *= -q / (k as f64 * (k + order) as f64);
        sum += term;
        // terms decrease monotonically once k exceeds x/2
        if term.abs() < 1e-17 && k as f64 > half {
            break;
        }
    }
    sum
}

fn bessel_miller(order: u32, x: f64) -> f64 {
    let n = order as usize;
    let top = n.max(x as usize);
    let mut start = top + 20 + (40.0 * top as f64).sqrt() as usize;
    start += start % 2;
    let two_over_x = 2.0 / x;
    let (mut j_next, mut j_cur) = (0.0f64, 1e-30f64);
    let mut norm = 0.0;
    let mut wanted = 0.0;
    for k in (1..=start).rev() {
        let j_prev = k as f64 * two_over_x * j_cur - j_next;
        j_next = j_cur;
        j_cur = j_prev;
        if j_cur.abs() > 1e250 {
            j_cur *= 1e-250;
            j_next *= 1e-250;
            norm *= 1e-250;
            wanted *= 1e-250;
        }
        // j_cur now holds J_{k-1}
        if (k - 1) % 2 == 0 && k - 1 > 0 {
            norm += j_cur;
        }
        if k - 1 == n {
            wanted = j_cur;
        }
    }
    // J_0 + 2 Σ_k J_{2k} = 1
    let normalization = j_cur + 2.0 * norm;
    wanted / normalization
}

/// Ω_e1 (multiplying aσ⁺) and Ω_e2 (multiplying a†σ⁺) after eliminating
/// the intermediate level; cavity counter-rotating denominators 1/(ω₁+ω_C)
/// are dropped.
pub fn effective_couplings(p: &EngineeringParams) -> Result<(f64, f64)> {
    if p.delta_1 == 0.0 {
        return Err(Error::ZeroDetuning("delta_1"));
    }
    if p.delta_2 == 0.0 {
        return Err(Error::ZeroDetuning("delta_2"));
    }
    let prefactor = 0.5 * p.omega_2 * p.omega_1;
    let omega_e1 = prefactor * (1.0 / p.delta_2 - 1.0 / p.delta_1);
    let omega_e2 = prefactor / p.delta_2;
    Ok((omega_e1, omega_e2))
}

/// Period-averaged couplings of the modulated frame:
/// `Ω_e3 = Ω_e1 J₀(A/ω_s)/√N`, `Ω_e4 = Ω_e2 J_{2n_t}(A/ω_s)/√N`.
pub fn floquet_couplings(p: &EngineeringParams, omega_e1: f64, omega_e2: f64) -> Result<(f64, f64)> {
    if p.n_sites == 0 {
        return Err(Error::InvalidParameter("n_sites must be at least 1".into()));
    }
    if !(p.drive_freq > 0.0) {
        return Err(Error::InvalidParameter("drive_freq must be positive".into()));
    }
    let ratio = p.drive_ratio();
    let root_n = (p.n_sites as f64).sqrt();
    let omega_e3 = omega_e1 / root_n * bessel_j(0, ratio)?;
    let omega_e4 = omega_e2 / root_n * bessel_j(2 * p.sideband, ratio)?;
    Ok((omega_e3, omega_e4))
}

/// `(ω̃_C, ω̃_A) = (ω_C − n_t ω_s, ω_A − n_t ω_s)`.
pub fn renormalized_frequencies(p: &EngineeringParams) -> (f64, f64) {
    let shift = p.sideband as f64 * p.drive_freq;
    (p.omega_c_bare - shift, p.omega_a_bare - shift)
}

/// Map (Ω_e3, Ω_e4) onto (Ω, α) so that `(1−α)Ω/√N = |Ω_e3|` and
/// `αΩ/√N = |Ω_e4|`.
pub fn anisotropy(omega_e3: f64, omega_e4: f64, n_sites: usize) -> Result<AdmCouplings> {
    if !omega_e3.is_finite() || !omega_e4.is_finite() {
        return Err(Error::NonFinite("coupling"));
    }
    if n_sites == 0 {
        return Err(Error::InvalidParameter("n_sites must be at least 1".into()));
    }
    let rw = omega_e3.abs();
    let crw = omega_e4.abs();
    let total = rw + crw;
    if total == 0.0 {
        return Err(Error::DegenerateCouplings);
    }
    Ok(AdmCouplings {
        rw,
        crw,
        omega_mean: (n_sites as f64).sqrt() * total,
        alpha: crw / total,
        rw_sign: if omega_e3 < 0.0 { -1.0 } else { 1.0 },
        crw_sign: if omega_e4 < 0.0 { -1.0 } else { 1.0 },
    })
}

/// Full chain from engineering parameters to the static model.
pub fn derive_model_couplings(p: &EngineeringParams) -> Result<AdmCouplings> {
    p.validate()?;
    let (e1, e2) = effective_couplings(p)?;
    let (e3, e4) = floquet_couplings(p, e1, e2)?;
    anisotropy(e3, e4, p.n_sites)
}
