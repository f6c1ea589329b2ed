//! N-mode Gaussian states stored as first and second quadrature moments.
//!
//! Quadratures are interleaved (`x₁, p₁, x₂, p₂, …`) and scaled so that
//! `x = a + a†` and `p = −i(a − a†)`. In these units the vacuum has
//! identity covariance.

use std::cell::Cell;

use nalgebra::{DMatrix, DVector};

use crate::error::{ensure_finite, Error, Result};
use crate::linalg;

/// Symmetry slack for covariance matrices (max absolute asymmetry).
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Eigenvalue slack for the uncertainty relation `cov + iΩ ≥ 0`.
pub const PHYSICALITY_TOL: f64 = 1e-9;

thread_local! {
    static EVOLUTIONS: Cell<u64> = const { Cell::new(0) };
}

/// Number of state updates (gates, channels, measurements) performed on
/// the current thread. Used by tests to assert that static analysis never
/// touches a state.
pub fn evolution_count() -> u64 {
    EVOLUTIONS.with(Cell::get)
}

pub(crate) fn count_evolution() {
    EVOLUTIONS.with(|c| c.set(c.get() + 1));
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

/// Result of [`GaussianState::validate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalityReport {
    pub symmetry_residual: f64,
    /// Smallest eigenvalue of the Hermitian matrix `cov + iΩ`.
    pub min_eigenvalue: f64,
    pub valid: bool,
}

impl GaussianState {
    /// The `n`-mode vacuum: zero mean, identity covariance.
    pub fn vacuum(n_modes: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::InvalidArgument("a state needs at least one mode".into()));
        }
        Ok(Self {
            mean: DVector::zeros(2 * n_modes),
            cov: DMatrix::identity(2 * n_modes, 2 * n_modes),
        })
    }

    /// Single-mode coherent state with quadrature means `(x, p)`.
    pub fn coherent(x: f64, p: f64) -> Result<Self> {
        ensure_finite("coherent amplitude", &[x, p])?;
        Self::from_moments(DVector::from_vec(vec![x, p]), DMatrix::identity(2, 2))
    }

    /// Single-mode thermal state with mean photon number `n_bar`.
    pub fn thermal(n_bar: f64) -> Result<Self> {
        if !(n_bar.is_finite() && n_bar >= 0.0) {
            return Err(Error::InvalidArgument("thermal occupation must be ≥ 0".into()));
        }
        Self::from_moments(
            DVector::zeros(2),
            DMatrix::identity(2, 2) * (2.0 * n_bar + 1.0),
        )
    }

    /// Builds a state from raw moments. Shapes, finiteness and symmetry are
    /// checked; physicality is not (see [`validate`](Self::validate)).
    pub fn from_moments(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if mean.is_empty() || !mean.len().is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "mean must have positive even length, got {}",
                mean.len()
            )));
        }
        if cov.nrows() != mean.len() || cov.ncols() != mean.len() {
            return Err(Error::InvalidArgument(format!(
                "covariance must be {0}x{0}, got {1}x{2}",
                mean.len(),
                cov.nrows(),
                cov.ncols()
            )));
        }
        ensure_finite("mean", mean.as_slice())?;
        ensure_finite("covariance", cov.as_slice())?;
        let asym = linalg::max_asymmetry(&cov);
        if asym > SYMMETRY_TOL {
            return Err(Error::InvalidArgument(format!(
                "covariance asymmetry {asym:e} exceeds {SYMMETRY_TOL:e}"
            )));
        }
        Ok(Self { mean, cov })
    }

    /// A state with no modes left, produced when every mode is measured.
    pub(crate) fn empty() -> Self {
        Self {
            mean: DVector::zeros(0),
            cov: DMatrix::zeros(0, 0),
        }
    }

    pub(crate) fn from_parts_unchecked(mean: DVector<f64>, cov: DMatrix<f64>) -> Self {
        debug_assert_eq!(mean.len(), cov.nrows());
        Self { mean, cov }
    }

    pub fn n_modes(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn into_parts(self) -> (DVector<f64>, DMatrix<f64>) {
        (self.mean, self.cov)
    }

    /// Symmetry residual and the smallest eigenvalue of `cov + iΩ`.
    pub fn validate(&self) -> PhysicalityReport {
        let symmetry_residual = linalg::max_asymmetry(&self.cov);
        let omega = linalg::symplectic_form(self.n_modes());
        let min_eigenvalue = linalg::min_eigenvalue_hermitian(&self.cov, &omega);
        PhysicalityReport {
            symmetry_residual,
            min_eigenvalue,
            valid: symmetry_residual <= SYMMETRY_TOL && min_eigenvalue >= -PHYSICALITY_TOL,
        }
    }

    pub fn check_modes(&self, modes: &[usize]) -> Result<()> {
        let n = self.n_modes();
        for (i, &m) in modes.iter().enumerate() {
            if m >= n {
                return Err(Error::Wiring(format!("mode {m} out of range for {n} modes")));
            }
            if modes[..i].contains(&m) {
                return Err(Error::Wiring(format!("mode {m} listed twice")));
            }
        }
        Ok(())
    }

    /// Marginal state of the listed modes, in the listed order.
    pub fn reduced(&self, modes: &[usize]) -> Result<Self> {
        self.check_modes(modes)?;
        if modes.is_empty() {
            return Err(Error::InvalidArgument("reduced state needs at least one mode".into()));
        }
        let idx = linalg::quadrature_indices(modes);
        Ok(Self {
            mean: linalg::select_subvector(&self.mean, &idx),
            cov: linalg::select_submatrix(&self.cov, &idx, &idx),
        })
    }

    /// Tensor product `self ⊗ other`; `other`'s modes are appended.
    pub fn tensor(&self, other: &Self) -> Self {
        let (a, b) = (self.mean.len(), other.mean.len());
        let mut mean = DVector::zeros(a + b);
        mean.rows_mut(0, a).copy_from(&self.mean);
        mean.rows_mut(a, b).copy_from(&other.mean);
        let mut cov = DMatrix::zeros(a + b, a + b);
        cov.view_mut((0, 0), (a, a)).copy_from(&self.cov);
        cov.view_mut((a, a), (b, b)).copy_from(&other.cov);
        Self { mean, cov }
    }

    /// `det(cov)`; equals 1 for pure states in vacuum units.
    pub fn purity_determinant(&self) -> f64 {
        self.cov.determinant()
    }

    /// Largest absolute deviation of the moments from those of `other`.
    pub fn moment_distance(&self, other: &Self) -> f64 {
        if self.mean.len() != other.mean.len() {
            return f64::INFINITY;
        }
        let dm = (&self.mean - &other.mean).amax();
        let dc = (&self.cov - &other.cov).amax();
        dm.max(dc)
    }

    /// Applies `cov ← M cov Mᵀ + Y`, `mean ← M mean + d` where `M` acts
    /// on the quadratures `idx` and as the identity elsewhere. Costs
    /// O(N) per call for a fixed number of target modes.
    pub(crate) fn apply_local_affine(
        &mut self,
        idx: &[usize],
        m: &DMatrix<f64>,
        noise: Option<&DMatrix<f64>>,
        d: &DVector<f64>,
    ) {
        count_evolution();
        let k = idx.len();
        let dim = self.mean.len();

        let old: Vec<f64> = idx.iter().map(|&i| self.mean[i]).collect();
        for (a, &i) in idx.iter().enumerate() {
            let mut v = d[a];
            for (b, o) in old.iter().enumerate() {
                v += m[(a, b)] * o;
            }
            self.mean[i] = v;
        }

        // Columns `idx` of cov·Mᵀ, computed for every row from the old
        // columns; rows `idx` then follow by symmetry.
        let mut cols = vec![0.0; k * dim];
        for a in 0..k {
            for (b, &j) in idx.iter().enumerate() {
                let coef = m[(a, b)];
                if coef == 0.0 {
                    continue;
                }
                let src = self.cov.column(j);
                let dst = &mut cols[a * dim..(a + 1) * dim];
                for (o, s) in dst.iter_mut().zip(src.iter()) {
                    *o += coef * s;
                }
            }
        }
        // Block (idx, idx) needs M applied on the left as well.
        let mut block = DMatrix::zeros(k, k);
        for a in 0..k {
            for c in 0..k {
                let mut v = 0.0;
                for (b, &i) in idx.iter().enumerate() {
                    v += m[(a, b)] * cols[c * dim + i];
                }
                block[(a, c)] = v;
            }
        }
        if let Some(y) = noise {
            block += y;
        }
        let block = (&block + block.transpose()) * 0.5;

        for a in 0..k {
            let j = idx[a];
            let src = &cols[a * dim..(a + 1) * dim];
            self.cov.column_mut(j).copy_from_slice(src);
            for (r, &v) in src.iter().enumerate() {
                self.cov[(j, r)] = v;
            }
        }
        for a in 0..k {
            for c in 0..k {
                self.cov[(idx[a], idx[c])] = block[(a, c)];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vacuum_has_zero_mean_and_identity_cov() {
        let s = GaussianState::vacuum(2).unwrap();
        assert_eq!(s.mean().as_slice(), &[0.0; 4]);
        assert_eq!(s.cov(), &DMatrix::identity(4, 4));
        assert!(GaussianState::vacuum(0).is_err());
    }

    #[test]
    fn vacuum_is_on_the_physicality_boundary() {
        let r = GaussianState::vacuum(1).unwrap().validate();
        assert!(r.valid);
        assert!(r.min_eigenvalue.abs() < 1e-12);
    }

    #[test]
    fn large_vacuum_allocates() {
        let s = GaussianState::vacuum(1000).unwrap();
        assert_eq!(s.mean().len(), 2000);
        assert_eq!(s.cov().shape(), (2000, 2000));
        assert!(s.mean().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sub_vacuum_noise_is_unphysical() {
        let s = GaussianState::from_moments(DVector::zeros(2), DMatrix::identity(2, 2) * 0.5)
            .unwrap();
        let r = s.validate();
        assert!(!r.valid);
        assert!(r.min_eigenvalue < -0.4);
    }

    #[test]
    fn from_moments_rejects_bad_shapes_and_asymmetry() {
        assert!(GaussianState::from_moments(DVector::zeros(3), DMatrix::identity(3, 3)).is_err());
        assert!(GaussianState::from_moments(DVector::zeros(2), DMatrix::identity(4, 4)).is_err());
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(GaussianState::from_moments(DVector::zeros(2), asym).is_err());
        let nan = DMatrix::from_row_slice(2, 2, &[f64::NAN, 0.0, 0.0, 1.0]);
        assert!(GaussianState::from_moments(DVector::zeros(2), nan).is_err());
    }

    #[test]
    fn reduced_and_tensor_are_inverse() {
        let a = GaussianState::coherent(1.0, -2.0).unwrap();
        let b = GaussianState::thermal(0.5).unwrap();
        let ab = a.tensor(&b);
        assert_eq!(ab.reduced(&[0]).unwrap(), a);
        assert_eq!(ab.reduced(&[1]).unwrap(), b);
        assert!(ab.reduced(&[0, 0]).is_err());
        assert!(ab.reduced(&[2]).is_err());
    }
}
