//! Compressed-sparse-row operators with either real or complex entries.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Values {
    Real(Vec<f64>),
    Complex(Vec<C64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Values,
}

fn compress<T: Copy + std::ops::AddAssign>(
    dim: usize,
    triplets: impl IntoIterator<Item = (usize, usize, T)>,
) -> (Vec<usize>, Vec<usize>, Vec<T>) {
    let mut rows: Vec<BTreeMap<usize, T>> = vec![BTreeMap::new(); dim];
    for (r, c, v) in triplets {
        assert!(r < dim && c < dim, "entry ({r}, {c}) outside dimension {dim}");
        rows[r].entry(c).and_modify(|x| *x += v).or_insert(v);
    }
    let mut row_ptr = Vec::with_capacity(dim + 1);
    let mut col_idx = Vec::new();
    let mut values = Vec::new();
    row_ptr.push(0);
    for row in rows {
        for (c, v) in row {
            col_idx.push(c);
            values.push(v);
        }
        row_ptr.push(col_idx.len());
    }
    (row_ptr, col_idx, values)
}

impl SparseOperator {
    /// Duplicate entries are summed.
    pub fn from_real_triplets(dim: usize, triplets: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let (row_ptr, col_idx, values) = compress(dim, triplets);
        Self { dim, row_ptr, col_idx, values: Values::Real(values) }
    }

    pub fn from_complex_triplets(dim: usize, triplets: impl IntoIterator<Item = (usize, usize, C64)>) -> Self {
        let (row_ptr, col_idx, values) = compress(dim, triplets);
        Self { dim, row_ptr, col_idx, values: Values::Complex(values) }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        Self {
            dim: values.len(),
            row_ptr: (0..=values.len()).collect(),
            col_idx: (0..values.len()).collect(),
            values: Values::Real(values.to_vec()),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![1.0; dim])
    }

    pub fn zeros(dim: usize) -> Self {
        Self { dim, row_ptr: vec![0; dim + 1], col_idx: Vec::new(), values: Values::Real(Vec::new()) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn is_real(&self) -> bool {
        matches!(self.values, Values::Real(_))
    }

    fn value(&self, k: usize) -> C64 {
        match &self.values {
            Values::Real(v) => C64::new(v[k], 0.0),
            Values::Complex(v) => v[k],
        }
    }

    /// All stored entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.col_idx[k], self.value(k)))
        })
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        let range = self.row_ptr[row]..self.row_ptr[row + 1];
        match self.col_idx[range.clone()].binary_search(&col) {
            Ok(pos) => self.value(range.start + pos),
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn diagonal_values(&self) -> Vec<C64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        match &self.values {
            Values::Real(v) => v.iter().fold(0.0, |m, x| m.max(x.abs())),
            Values::Complex(v) => v.iter().fold(0.0, |m, x| m.max(x.norm())),
        }
    }

    /// max |A_ij − conj(A_ji)|.
    pub fn hermitian_deviation(&self) -> f64 {
        self.entries()
            .map(|(r, c, v)| (v - self.get(c, r).conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian_deviation() <= 1e-14 * self.max_abs().max(1.0)
    }

    /// Max absolute row sum; an upper bound on the spectral norm of a
    /// Hermitian operator.
    pub fn gershgorin_bound(&self) -> f64 {
        (0..self.dim)
            .map(|r| (self.row_ptr[r]..self.row_ptr[r + 1]).map(|k| self.value(k).norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `y += scale · A x`.
    pub fn apply_add(&self, scale: f64, x: &[C64], y: &mut [C64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        match &self.values {
            Values::Real(v) => {
                for (r, yr) in y.iter_mut().enumerate() {
                    let mut acc = C64::new(0.0, 0.0);
                    for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                        acc += x[self.col_idx[k]] * v[k];
                    }
                    *yr += acc * scale;
                }
            }
            Values::Complex(v) => {
                for (r, yr) in y.iter_mut().enumerate() {
                    let mut acc = C64::new(0.0, 0.0);
                    for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                        acc += x[self.col_idx[k]] * v[k];
                    }
                    *yr += acc * scale;
                }
            }
        }
    }

    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.dim];
        self.apply_add(1.0, x, &mut y);
        y
    }

    /// ⟨x|A|x⟩.
    pub fn expectation(&self, x: &[C64]) -> C64 {
        let ax = self.apply(x);
        x.iter().zip(&ax).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let values = match &self.values {
            Values::Real(v) => Values::Real(v.iter().map(|x| x * factor).collect()),
            Values::Complex(v) => Values::Complex(v.iter().map(|x| x * factor).collect()),
        };
        Self { values, ..self.clone() }
    }

    /// Σ cᵢ Aᵢ over operators of equal dimension.
    pub fn linear_combination(terms: &[(f64, &SparseOperator)]) -> Result<Self> {
        let dim = terms.first().map(|(_, op)| op.dim).unwrap_or(0);
        for (_, op) in terms {
            if op.dim != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: op.dim });
            }
        }
        if terms.iter().all(|(_, op)| op.is_real()) {
            let triplets = terms
                .iter()
                .filter(|(c, _)| *c != 0.0)
                .flat_map(|(c, op)| op.entries().map(move |(r, col, v)| (r, col, c * v.re)));
            Ok(Self::from_real_triplets(dim, triplets))
        } else {
            let triplets = terms
                .iter()
                .filter(|(c, _)| *c != 0.0)
                .flat_map(|(c, op)| op.entries().map(move |(r, col, v)| (r, col, v * c)));
            Ok(Self::from_complex_triplets(dim, triplets))
        }
    }

    pub fn multiply(&self, other: &SparseOperator) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        let mut triplets = Vec::new();
        for (r, k, a) in self.entries() {
            for idx in other.row_ptr[k]..other.row_ptr[k + 1] {
                triplets.push((r, other.col_idx[idx], a * other.value(idx)));
            }
        }
        if self.is_real() && other.is_real() {
            Ok(Self::from_real_triplets(self.dim, triplets.into_iter().map(|(r, c, v)| (r, c, v.re))))
        } else {
            Ok(Self::from_complex_triplets(self.dim, triplets))
        }
    }

    /// Dense row-major copy.
    pub fn to_dense(&self) -> Vec<Vec<C64>> {
        let mut m = vec![vec![C64::new(0.0, 0.0); self.dim]; self.dim];
        for (r, c, v) in self.entries() {
            m[r][c] = v;
        }
        m
    }

    /// Dense column-major block `A[indices, indices]` of a real operator.
    pub fn dense_real_block(&self, indices: &[usize]) -> Result<Vec<f64>> {
        let Values::Real(vals) = &self.values else {
            return Err(Error::InvalidParameter("dense real block requested from complex operator".into()));
        };
        let n = indices.len();
        let mut position = vec![usize::MAX; self.dim];
        for (p, &i) in indices.iter().enumerate() {
            position[i] = p;
        }
        let mut block = vec![0.0; n * n];
        for (col_pos, &r) in indices.iter().enumerate() {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let p = position[self.col_idx[k]];
                if p != usize::MAX {
                    // symmetric input: row r of A is column r
                    block[col_pos * n + p] = vals[k];
                }
            }
        }
        Ok(block)
    }
}

/// Largest entry magnitude of `[A, B]`.
pub fn commutator_max_abs(a: &SparseOperator, b: &SparseOperator) -> Result<f64> {
    let ab = a.multiply(b)?;
    let ba = b.multiply(a)?;
    let diff = SparseOperator::linear_combination(&[(1.0, &ab), (-1.0, &ba)])?;
    Ok(diff.max_abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pauli_x() -> SparseOperator {
        SparseOperator::from_real_triplets(2, [(0, 1, 1.0), (1, 0, 1.0)])
    }

    fn pauli_y() -> SparseOperator {
        SparseOperator::from_complex_triplets(2, [(0, 1, C64::new(0.0, -1.0)), (1, 0, C64::new(0.0, 1.0))])
    }

    fn pauli_z() -> SparseOperator {
        SparseOperator::diagonal(&[1.0, -1.0])
    }

    #[test]
    fn duplicates_are_summed() {
        let a = SparseOperator::from_real_triplets(2, [(0, 1, 1.0), (0, 1, 2.0)]);
        assert_eq!(a.nnz(), 1);
        assert_eq!(a.get(0, 1).re, 3.0);
        assert_eq!(a.get(1, 0).re, 0.0);
    }

    #[test]
    fn pauli_algebra() {
        // [X, Y] = 2iZ
        let xy = pauli_x().multiply(&pauli_y()).unwrap();
        assert_eq!(xy.get(0, 0), C64::new(0.0, 1.0));
        assert_eq!(commutator_max_abs(&pauli_x(), &pauli_y()).unwrap(), 2.0);
        assert_eq!(commutator_max_abs(&pauli_z(), &pauli_z()).unwrap(), 0.0);
    }

    #[test]
    fn hermiticity_check() {
        assert!(pauli_y().is_hermitian());
        let skew = SparseOperator::from_real_triplets(2, [(0, 1, 1.0), (1, 0, -1.0)]);
        assert!(!skew.is_hermitian());
        assert_eq!(skew.hermitian_deviation(), 2.0);
    }

    #[test]
    fn apply_and_expectation() {
        let x = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        assert_eq!(pauli_x().apply(&x), vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)]);
        assert_eq!(pauli_z().expectation(&x).re, 1.0);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = [C64::new(s, 0.0), C64::new(s, 0.0)];
        assert!((pauli_x().expectation(&plus).re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn linear_combination_and_blocks() {
        let h = SparseOperator::linear_combination(&[(0.5, &pauli_x()), (2.0, &pauli_z())]).unwrap();
        assert!(h.is_real());
        assert_eq!(h.dense_real_block(&[0, 1]).unwrap(), vec![2.0, 0.5, 0.5, -2.0]);
        assert_eq!(h.dense_real_block(&[1]).unwrap(), vec![-2.0]);
        assert_eq!(h.gershgorin_bound(), 2.5);
        let bad = SparseOperator::identity(3);
        assert!(SparseOperator::linear_combination(&[(1.0, &h), (1.0, &bad)]).is_err());
    }
}
