//! Parity-resolved exact diagonalization and spectral flow along a sweep of
//! one control parameter.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{CompositeBasis, Parity};
use crate::error::{Error, Result};
use crate::hamiltonian::{assemble, ModelParams, TermSet};
use crate::linalg;
use crate::sparse::SparseOperator;

/// Lowest eigenpairs of one parity block. Eigenvectors are stored over the
/// sector sub-basis `sector` (ascending flat indices).
#[derive(Clone, Debug)]
pub struct EigenSolution {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<f64>>,
    pub parity: Parity,
    pub sector: Vec<usize>,
    full_dim: usize,
}

impl EigenSolution {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Eigenvector `level` as a complex amplitude vector on the full basis.
    pub fn embed(&self, level: usize) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.full_dim];
        for (&i, &v) in self.sector.iter().zip(&self.eigenvectors[level]) {
            out[i] = C64::new(v, 0.0);
        }
        out
    }
}

/// Largest-magnitude component positive (first one on ties).
fn fix_sign(v: &mut [f64]) {
    let mut best = 0usize;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() * (1.0 + 1e-12) {
            best = i;
        }
    }
    if v.get(best).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

pub fn eigenpairs_in_sector(h: &SparseOperator, basis: &CompositeBasis, parity: Parity, k: usize) -> Result<EigenSolution> {
    if h.dim() != basis.dim() {
        return Err(Error::DimensionMismatch { expected: basis.dim(), found: h.dim() });
    }
    if !h.is_hermitian() {
        return Err(Error::NotHermitian(h.hermitian_deviation()));
    }
    let sector = basis.sector_indices(parity);
    let n = sector.len();
    if k > n {
        return Err(Error::TooManyLevels { requested: k, available: n });
    }
    let mut block = h.dense_real_block(&sector)?;
    let (eigenvalues, z) = linalg::lowest_eigenpairs(&mut block, n, k, true)?;
    let eigenvectors = z
        .chunks(n.max(1))
        .take(eigenvalues.len())
        .map(|c| {
            let mut v = c.to_vec();
            fix_sign(&mut v);
            v
        })
        .collect();
    Ok(EigenSolution { eigenvalues, eigenvectors, parity, sector, full_dim: basis.dim() })
}

/// All eigenvalues of one parity block.
pub fn sector_spectrum(h: &SparseOperator, basis: &CompositeBasis, parity: Parity) -> Result<Vec<f64>> {
    if !h.is_hermitian() {
        return Err(Error::NotHermitian(h.hermitian_deviation()));
    }
    let sector = basis.sector_indices(parity);
    let mut block = h.dense_real_block(&sector)?;
    linalg::eigenvalues(&mut block, sector.len())
}

/// Spectral norm `max |λ|` from exact extreme eigenvalues of both sectors.
pub fn spectral_norm(h: &SparseOperator, basis: &CompositeBasis) -> Result<f64> {
    let mut norm = 0.0f64;
    for p in Parity::both() {
        let w = sector_spectrum(h, basis, p)?;
        if let (Some(lo), Some(hi)) = (w.first(), w.last()) {
            norm = norm.max(lo.abs()).max(hi.abs());
        }
    }
    Ok(norm)
}

/// Parameter varied along a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Control {
    /// Ω
    Coupling,
    /// ω̃_A
    AtomFrequency,
}

impl Control {
    pub fn apply(self, base: &ModelParams, value: f64) -> ModelParams {
        let mut p = *base;
        match self {
            Control::Coupling => p.omega = value,
            Control::AtomFrequency => p.omega_a_tilde = value,
        }
        p
    }

    pub fn value(self, p: &ModelParams) -> f64 {
        match self {
            Control::Coupling => p.omega,
            Control::AtomFrequency => p.omega_a_tilde,
        }
    }
}

/// Uniform grid of `points` values from `start` to `end` inclusive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlGrid {
    pub control: Control,
    pub start: f64,
    pub end: f64,
    pub points: usize,
}

impl ControlGrid {
    pub fn values(&self) -> Result<Vec<f64>> {
        if !self.start.is_finite() || !self.end.is_finite() {
            return Err(Error::NonFinite("control grid bound"));
        }
        match self.points {
            0 => Err(Error::InvalidParameter("control grid needs at least one point".into())),
            1 => Ok(vec![self.start]),
            n => {
                if self.start == self.end {
                    return Err(Error::InvalidParameter("control grid is not monotone".into()));
                }
                let step = (self.end - self.start) / (n - 1) as f64;
                Ok((0..n).map(|i| if i == n - 1 { self.end } else { self.start + step * i as f64 }).collect())
            }
        }
    }
}

/// Overlap below this between consecutive tracked eigenvectors is flagged.
pub const TRACKING_THRESHOLD: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrackingFlag {
    /// Transition from grid point `grid_index` to `grid_index + 1`.
    pub grid_index: usize,
    pub level: usize,
    pub overlap: f64,
}

#[derive(Clone, Debug)]
pub struct SectorFlow {
    pub parity: Parity,
    /// `energies[g][l]`: level `l` (ascending) at grid point `g`.
    pub energies: Vec<Vec<f64>>,
    /// `track_map[g][l]`: the level at grid point `g + 1` continuing level
    /// `l` of grid point `g`.
    pub track_map: Vec<Vec<usize>>,
    pub flags: Vec<TrackingFlag>,
}

#[derive(Clone, Debug)]
pub struct SpectralFlow {
    pub control: Control,
    pub grid: Vec<f64>,
    pub sectors: Vec<SectorFlow>,
}

impl SpectralFlow {
    pub fn sector(&self, parity: Parity) -> Option<&SectorFlow> {
        self.sectors.iter().find(|s| s.parity == parity)
    }
}

/// Greedy maximal-overlap matching between two eigenvector sets.
fn track(prev: &[Vec<f64>], next: &[Vec<f64>], grid_index: usize) -> (Vec<usize>, Vec<TrackingFlag>) {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (l, u) in prev.iter().enumerate() {
        for (m, v) in next.iter().enumerate() {
            let ov: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
            pairs.push((ov.abs(), l, m));
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut map = vec![usize::MAX; prev.len()];
    let mut best = vec![0.0; prev.len()];
    let mut taken = vec![false; next.len()];
    for (ov, l, m) in pairs {
        if map[l] == usize::MAX && !taken[m] {
            map[l] = m;
            best[l] = ov;
            taken[m] = true;
        }
    }
    let flags = best
        .iter()
        .enumerate()
        .filter(|(_, &ov)| ov < TRACKING_THRESHOLD)
        .map(|(level, &overlap)| TrackingFlag { grid_index, level, overlap })
        .collect();
    (map, flags)
}

/// `k` lowest levels of each requested sector at every grid point.
pub fn spectral_flow(
    terms: &TermSet,
    base: &ModelParams,
    grid: &ControlGrid,
    k: usize,
    parities: &[Parity],
) -> Result<SpectralFlow> {
    let values = grid.values()?;
    let solve = |c: &f64| -> Result<Vec<EigenSolution>> {
        let params = grid.control.apply(base, *c);
        params.validate()?;
        let h = assemble(terms, &params)?;
        parities.iter().map(|&p| eigenpairs_in_sector(&h, &terms.basis, p, k)).collect()
    };
    let solved: Vec<Vec<EigenSolution>> = values.par_iter().map(solve).collect::<Result<_>>()?;

    let sectors = parities
        .iter()
        .enumerate()
        .map(|(s, &parity)| {
            let energies = solved.iter().map(|per| per[s].eigenvalues.clone()).collect();
            let mut track_map = Vec::new();
            let mut flags = Vec::new();
            for g in 0..solved.len().saturating_sub(1) {
                let (map, f) = track(&solved[g][s].eigenvectors, &solved[g + 1][s].eigenvectors, g);
                track_map.push(map);
                flags.extend(f);
            }
            SectorFlow { parity, energies, track_map, flags }
        })
        .collect();
    Ok(SpectralFlow { control: grid.control, grid: values, sectors })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GapPoint {
    pub control: f64,
    pub gap: f64,
    pub grid_index: usize,
}

/// Grid point minimizing `E_j − E_i` within one sector.
pub fn min_gap(flow: &SpectralFlow, parity: Parity, levels: (usize, usize)) -> Result<GapPoint> {
    let sector = flow
        .sector(parity)
        .ok_or_else(|| Error::Precondition(format!("sector {parity:?} absent from the flow")))?;
    let (i, j) = levels;
    let mut best: Option<GapPoint> = None;
    for (g, e) in sector.energies.iter().enumerate() {
        let (Some(a), Some(b)) = (e.get(i), e.get(j)) else {
            return Err(Error::TooManyLevels { requested: i.max(j) + 1, available: e.len() });
        };
        let gap = (b - a).abs();
        if best.is_none_or(|p| gap < p.gap) {
            best = Some(GapPoint { control: flow.grid[g], gap, grid_index: g });
        }
    }
    best.ok_or_else(|| Error::Precondition("empty spectral flow".into()))
}

/// Golden-section minimization of `f` on `[lo, hi]` until the bracket is
/// narrower than `tol`. Returns `(argmin, min)`.
pub fn golden_section_min<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    let (fa, fb) = (f(a)?, f(b)?);
    let mut best = if fa < fb { (a, fa) } else { (b, fb) };
    for _ in 0..200 {
        if b - a <= tol {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2)?;
        }
    }
    for cand in [(x1, f1), (x2, f2)] {
        if cand.1 < best.1 {
            best = cand;
        }
    }
    Ok(best)
}

/// Refine a grid minimum of the `(i, j)` gap inside the neighbouring grid
/// cells by golden-section search on the control parameter.
pub fn refine_gap(
    terms: &TermSet,
    base: &ModelParams,
    flow: &SpectralFlow,
    parity: Parity,
    levels: (usize, usize),
    coarse: GapPoint,
    tol: f64,
) -> Result<GapPoint> {
    let g = coarse.grid_index;
    let lo = flow.grid[g.saturating_sub(1)];
    let hi = flow.grid[(g + 1).min(flow.grid.len() - 1)];
    if lo == hi {
        return Ok(coarse);
    }
    let k = levels.0.max(levels.1) + 1;
    let gap_at = |c: f64| -> Result<f64> {
        let h = assemble(terms, &flow.control.apply(base, c))?;
        let sol = eigenpairs_in_sector(&h, &terms.basis, parity, k)?;
        Ok((sol.eigenvalues[levels.1] - sol.eigenvalues[levels.0]).abs())
    };
    let (control, gap) = golden_section_min(gap_at, lo, hi, tol)?;
    Ok(if gap < coarse.gap { GapPoint { control, gap, grid_index: g } } else { coarse })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GapKind {
    Crossing,
    Avoided,
}

/// Relative threshold separating true from avoided crossings.
pub const CROSSING_RELATIVE_TOLERANCE: f64 = 1e-6;

/// `width` is the energy span used as the scale, e.g. the spread of the
/// retained levels.
pub fn classify_gap(gap: f64, width: f64) -> GapKind {
    if gap < CROSSING_RELATIVE_TOLERANCE * width.abs() {
        GapKind::Crossing
    } else {
        GapKind::Avoided
    }
}

/// Span of all retained levels of a sector over the whole flow.
pub fn sector_width(flow: &SpectralFlow, parity: Parity) -> f64 {
    let Some(s) = flow.sector(parity) else { return 0.0 };
    let all = s.energies.iter().flatten();
    let lo = all.clone().copied().fold(f64::INFINITY, f64::min);
    let hi = all.copied().fold(f64::NEG_INFINITY, f64::max);
    if lo.is_finite() { hi - lo } else { 0.0 }
}
