//! Thin safe layer over the LAPACK symmetric eigensolver.

// pulls in the system OpenBLAS/LAPACK symbols
extern crate openblas_src;

use crate::error::{Error, Result};

/// Lowest `k` eigenvalues (ascending) and, if requested, their eigenvectors
/// (column-major, `n × k`) of a real symmetric matrix stored column-major.
/// Only the lower triangle of `matrix` is referenced; it is overwritten.
pub fn lowest_eigenpairs(matrix: &mut [f64], n: usize, k: usize, vectors: bool) -> Result<(Vec<f64>, Vec<f64>)> {
    if matrix.len() != n * n {
        return Err(Error::DimensionMismatch { expected: n * n, found: matrix.len() });
    }
    if k > n {
        return Err(Error::TooManyLevels { requested: k, available: n });
    }
    if k == 0 || n == 0 {
        return Ok((Vec::new(), Vec::new()));
    }
    syevr(matrix, n, Some(k), vectors)
}

/// All eigenvalues, ascending.
pub fn eigenvalues(matrix: &mut [f64], n: usize) -> Result<Vec<f64>> {
    if matrix.len() != n * n {
        return Err(Error::DimensionMismatch { expected: n * n, found: matrix.len() });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    Ok(syevr(matrix, n, None, false)?.0)
}

fn syevr(a: &mut [f64], n: usize, k: Option<usize>, vectors: bool) -> Result<(Vec<f64>, Vec<f64>)> {
    let ni = i32::try_from(n).map_err(|_| Error::InvalidParameter(format!("matrix dimension {n} too large")))?;
    let (range, iu) = match k {
        Some(k) => (b'I', k as i32),
        None => (b'A', ni),
    };
    let jobz = if vectors { b'V' } else { b'N' };
    let cols = if vectors { iu as usize } else { 1 };
    let mut m = 0i32;
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n * cols];
    let mut isuppz = vec![0i32; 2 * n.max(1)];
    let mut info = 0i32;

    // workspace query
    let mut work = vec![0.0; 1];
    let mut iwork = vec![0i32; 1];
    unsafe {
        lapack::dsyevr(
            jobz, range, b'L', ni, a, ni, 0.0, 0.0, 1, iu, 0.0, &mut m, &mut w, &mut z, ni, &mut isuppz,
            &mut work, -1, &mut iwork, -1, &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack { routine: "dsyevr", info });
    }
    let lwork = work[0] as i32;
    let liwork = iwork[0];
    let mut work = vec![0.0; lwork.max(1) as usize];
    let mut iwork = vec![0i32; liwork.max(1) as usize];
    unsafe {
        lapack::dsyevr(
            jobz, range, b'L', ni, a, ni, 0.0, 0.0, 1, iu, 0.0, &mut m, &mut w, &mut z, ni, &mut isuppz,
            &mut work, lwork, &mut iwork, liwork, &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack { routine: "dsyevr", info });
    }
    w.truncate(m as usize);
    if vectors {
        z.truncate(n * m as usize);
    } else {
        z.clear();
    }
    Ok((w, z))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_closed_form() {
        // [[0, 0.1], [0.1, 2]] has eigenvalues 1 ± √1.01
        let mut a = vec![0.0, 0.1, 0.1, 2.0];
        let (w, z) = lowest_eigenpairs(&mut a, 2, 1, true).unwrap();
        assert!((w[0] - (1.0 - 1.01f64.sqrt())).abs() < 1e-15);
        let residual = (0.1 * z[1] - w[0] * z[0]).abs();
        assert!(residual < 1e-14);
    }

    #[test]
    fn all_eigenvalues_of_path_graph() {
        // tridiagonal 2 on the diagonal, -1 off: 2 − 2cos(kπ/(n+1))
        let n = 7;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i * n + i] = 2.0;
            if i + 1 < n {
                a[i * n + i + 1] = -1.0;
                a[(i + 1) * n + i] = -1.0;
            }
        }
        let w = eigenvalues(&mut a, n).unwrap();
        for (k, v) in w.iter().enumerate() {
            let exact = 2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((v - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_too_many_levels() {
        let mut a = vec![1.0];
        assert!(matches!(lowest_eigenpairs(&mut a, 1, 2, false), Err(Error::TooManyLevels { .. })));
    }
}
