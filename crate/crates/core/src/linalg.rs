//! Small dense linear-algebra helpers shared by the Gaussian engine.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// The `n`-mode symplectic form: block diagonal with `[[0, 1], [-1, 0]]`.
pub fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for j in 0..n_modes {
        omega[(2 * j, 2 * j + 1)] = 1.0;
        omega[(2 * j + 1, 2 * j)] = -1.0;
    }
    omega
}

/// Largest absolute entry of `m - mᵀ`.
pub fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// Smallest eigenvalue of the Hermitian matrix `re + i·im`.
///
/// `re` must be symmetric and `im` antisymmetric; only their
/// Hermitian part is used.
pub fn min_eigenvalue_hermitian(re: &DMatrix<f64>, im: &DMatrix<f64>) -> f64 {
    let n = re.nrows();
    if n == 0 {
        return 0.0;
    }
    let h = DMatrix::from_fn(n, n, |i, j| {
        let a = Complex64::new(re[(i, j)], im[(i, j)]);
        let b = Complex64::new(re[(j, i)], im[(j, i)]).conj();
        (a + b) * 0.5
    });
    h.symmetric_eigenvalues().min()
}

/// Smallest eigenvalue of a real symmetric matrix.
pub fn min_eigenvalue_symmetric(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues().min()
}

/// Moore–Penrose pseudo-inverse of a symmetric matrix, discarding
/// eigenvalues below `rel_tol` times the largest one.
pub fn pseudo_inverse_symmetric(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let n = m.nrows();
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let scale = eig.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut inv = DMatrix::zeros(n, n);
    if scale == 0.0 {
        return inv;
    }
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda.abs() > rel_tol * scale {
            let v = eig.eigenvectors.column(k);
            inv += (v * v.transpose()) / lambda;
        }
    }
    inv
}

/// A factor `L` with `L Lᵀ = cov` for a positive semidefinite `cov`,
/// built from the eigendecomposition so singular covariances are allowed.
pub fn psd_factor(cov: &DMatrix<f64>, slack: f64) -> Result<DMatrix<f64>> {
    let n = cov.nrows();
    if max_asymmetry(cov) > 1e-9 * max_abs(cov).max(1.0) {
        return Err(Error::Numerical("covariance is not symmetric".into()));
    }
    let sym = (cov + cov.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut factor = eig.eigenvectors.clone();
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda < -slack {
            return Err(Error::Numerical(format!(
                "covariance has negative eigenvalue {lambda:e}"
            )));
        }
        let s = lambda.max(0.0).sqrt();
        for i in 0..n {
            factor[(i, k)] *= s;
        }
    }
    Ok(factor)
}

/// Quadrature indices `(2m, 2m + 1)` for every listed mode, in order.
pub fn quadrature_indices(modes: &[usize]) -> Vec<usize> {
    modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect()
}

pub fn select_submatrix(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

pub fn select_subvector(v: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    DVector::from_fn(idx.len(), |i, _| v[idx[i]])
}

/// Rotation `[[cos, -sin], [sin, cos]]` by `angle` in a quadrature plane.
pub fn rotation(angle: f64) -> DMatrix<f64> {
    let (s, c) = angle.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symplectic_form_squares_to_minus_identity() {
        let omega = symplectic_form(3);
        assert_eq!(&omega * &omega, -DMatrix::<f64>::identity(6, 6));
        assert_eq!(omega.transpose(), -omega);
    }

    #[test]
    fn vacuum_saturates_uncertainty() {
        let re = DMatrix::<f64>::identity(2, 2);
        let im = symplectic_form(1);
        assert!(min_eigenvalue_hermitian(&re, &im).abs() < 1e-12);
    }

    #[test]
    fn pseudo_inverse_of_rank_one_projector() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]);
        let p = pseudo_inverse_symmetric(&m, 1e-14);
        assert!((p[(0, 0)] - 0.5).abs() < 1e-15);
        assert_eq!(p[(1, 1)], 0.0);
    }

    #[test]
    fn psd_factor_reproduces_covariance() {
        let cov = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let l = psd_factor(&cov, 1e-12).unwrap();
        assert!(max_abs(&(&l * l.transpose() - &cov)) < 1e-12);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(psd_factor(&bad, 1e-12).is_err());
    }
}
