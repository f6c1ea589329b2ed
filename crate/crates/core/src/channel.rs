//! Gaussian completely positive maps in `(X, Y, d)` form:
//! `cov → X cov Xᵀ + Y`, `mean → X mean + d`.

use nalgebra::{DMatrix, DVector};

use crate::error::{ensure_finite, Error, Result};
use crate::linalg;
use crate::state::GaussianState;
use crate::symplectic::{check_distinct, positions, SymplecticOp};

/// Eigenvalue slack of the complete-positivity test.
pub const CP_TOL: f64 = 1e-9;
/// Eigenvalue slack for the noise matrix `Y` being positive semidefinite.
pub const NOISE_PSD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianChannel {
    x: DMatrix<f64>,
    y: DMatrix<f64>,
    d: DVector<f64>,
    modes: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CpReport {
    /// Smallest eigenvalue of `Y + iΩ − i X Ω Xᵀ`.
    pub min_eigenvalue: f64,
    pub is_cp: bool,
}

impl GaussianChannel {
    /// Wraps raw `(X, Y, d)`. `Y` must be symmetric and positive
    /// semidefinite; complete positivity is reported by [`is_cp`](Self::is_cp)
    /// and enforced on application.
    pub fn new(
        x: DMatrix<f64>,
        y: DMatrix<f64>,
        d: DVector<f64>,
        modes: Vec<usize>,
    ) -> Result<Self> {
        check_distinct(&modes)?;
        let dim = 2 * modes.len();
        if x.shape() != (dim, dim) || y.shape() != (dim, dim) || d.len() != dim {
            return Err(Error::InvalidArgument(format!(
                "channel on {} modes needs {dim}x{dim} X and Y and a length-{dim} displacement",
                modes.len()
            )));
        }
        ensure_finite("X", x.as_slice())?;
        ensure_finite("Y", y.as_slice())?;
        ensure_finite("displacement", d.as_slice())?;
        let asym = linalg::max_asymmetry(&y);
        if asym > 1e-12 {
            return Err(Error::InvalidArgument(format!("Y asymmetry {asym:e}")));
        }
        let min = linalg::min_eigenvalue_symmetric(&y);
        if min < -NOISE_PSD_TOL {
            return Err(Error::InvalidArgument(format!(
                "Y is not positive semidefinite (eigenvalue {min:e})"
            )));
        }
        Ok(Self { x, y, d, modes })
    }

    pub fn identity(modes: Vec<usize>) -> Result<Self> {
        let dim = 2 * modes.len();
        Self::new(
            DMatrix::identity(dim, dim),
            DMatrix::zeros(dim, dim),
            DVector::zeros(dim),
            modes,
        )
    }

    /// Pure loss with transmissivity `eta ∈ [0, 1]`.
    pub fn loss(mode: usize, eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidArgument(format!(
                "loss transmissivity must lie in [0, 1], got {eta}"
            )));
        }
        Self::new(
            DMatrix::identity(2, 2) * eta.sqrt(),
            DMatrix::identity(2, 2) * (1.0 - eta),
            DVector::zeros(2),
            vec![mode],
        )
    }

    /// Quantum-limited phase-insensitive amplifier with `gain ≥ 1`.
    pub fn amplifier(mode: usize, gain: f64) -> Result<Self> {
        if !(gain.is_finite() && gain >= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "amplifier gain must be ≥ 1, got {gain}"
            )));
        }
        Self::new(
            DMatrix::identity(2, 2) * gain.sqrt(),
            DMatrix::identity(2, 2) * (gain - 1.0),
            DVector::zeros(2),
            vec![mode],
        )
    }

    /// Phase-sensitive amplifier `X = diag(g, 1/g)` with
    /// `Y = extra_noise·I + Y_min`, where `Y_min = |1 − det X|·I` is the
    /// smallest isotropic noise making the map CP (zero here, since
    /// `det X = 1`: the noiseless case is a squeezer).
    pub fn phase_sensitive_amplifier(mode: usize, g: f64, extra_noise: f64) -> Result<Self> {
        if !(g.is_finite() && g > 0.0) {
            return Err(Error::InvalidArgument(format!("gain must be > 0, got {g}")));
        }
        if !(extra_noise.is_finite() && extra_noise >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "extra noise must be ≥ 0, got {extra_noise}"
            )));
        }
        let x = DMatrix::from_diagonal(&DVector::from_vec(vec![g, 1.0 / g]));
        let y_min = (1.0 - x.determinant()).abs();
        let ch = Self::new(
            x,
            DMatrix::identity(2, 2) * (extra_noise + y_min),
            DVector::zeros(2),
            vec![mode],
        )?;
        if !ch.is_cp().is_cp {
            return Err(Error::InvalidArgument("parameters do not give a CP map".into()));
        }
        Ok(ch)
    }

    /// Classical Gaussian noise with covariance `noise_cov` (2×2, PSD).
    pub fn additive_noise(mode: usize, noise_cov: DMatrix<f64>) -> Result<Self> {
        if noise_cov.shape() != (2, 2) {
            return Err(Error::InvalidArgument("noise covariance must be 2x2".into()));
        }
        Self::new(DMatrix::identity(2, 2), noise_cov, DVector::zeros(2), vec![mode])
    }

    /// A unitary channel: `Y = 0`, `X` the symplectic matrix.
    pub fn from_symplectic(op: &SymplecticOp) -> Result<Self> {
        let dim = op.matrix().nrows();
        Self::new(
            op.matrix().clone(),
            DMatrix::zeros(dim, dim),
            op.displacement().clone(),
            op.modes().to_vec(),
        )
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn displacement(&self) -> &DVector<f64> {
        &self.d
    }

    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    pub fn is_cp(&self) -> CpReport {
        let omega = linalg::symplectic_form(self.modes.len());
        let im = &omega - &self.x * &omega * self.x.transpose();
        let min_eigenvalue = linalg::min_eigenvalue_hermitian(&self.y, &im);
        CpReport {
            min_eigenvalue,
            is_cp: min_eigenvalue >= -CP_TOL,
        }
    }

    pub fn embed(&self, modes: &[usize]) -> Result<Self> {
        check_distinct(modes)?;
        let pos = positions(&self.modes, modes)?;
        let dim = 2 * modes.len();
        let mut x = DMatrix::identity(dim, dim);
        let mut y = DMatrix::zeros(dim, dim);
        let mut d = DVector::zeros(dim);
        let idx = linalg::quadrature_indices(&pos);
        for (a, &i) in idx.iter().enumerate() {
            d[i] = self.d[a];
            for (b, &j) in idx.iter().enumerate() {
                x[(i, j)] = self.x[(a, b)];
                y[(i, j)] = self.y[(a, b)];
            }
        }
        Self::new(x, y, d, modes.to_vec())
    }

    pub fn apply_to(&self, state: &mut GaussianState) -> Result<()> {
        state.check_modes(&self.modes)?;
        let report = self.is_cp();
        if !report.is_cp {
            return Err(Error::InvalidOperator(format!(
                "channel is not completely positive (eigenvalue {:e})",
                report.min_eigenvalue
            )));
        }
        let idx = linalg::quadrature_indices(&self.modes);
        state.apply_local_affine(&idx, &self.x, Some(&self.y), &self.d);
        Ok(())
    }
}

pub fn apply_channel(state: &GaussianState, ch: &GaussianChannel) -> Result<GaussianState> {
    let mut out = state.clone();
    ch.apply_to(&mut out)?;
    Ok(out)
}

/// `b` then `a`: `X = X_a X_b`, `Y = X_a Y_b X_aᵀ + Y_a`, `d = X_a d_b + d_a`.
pub fn compose_channels(a: &GaussianChannel, b: &GaussianChannel) -> Result<GaussianChannel> {
    if a.modes.len() != b.modes.len() {
        return Err(Error::Wiring("composed channels act on different mode sets".into()));
    }
    let b = b.embed(&a.modes)?;
    let y = &a.x * &b.y * a.x.transpose() + &a.y;
    let y = (&y + y.transpose()) * 0.5;
    GaussianChannel::new(&a.x * &b.x, y, &a.x * &b.d + &a.d, a.modes.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag2(a: f64, b: f64) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_vec(vec![a, b]))
    }

    fn close(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> bool {
        linalg::max_abs(&(a - b)) <= tol
    }

    #[test]
    fn unit_transmission_is_identity() {
        let ch = GaussianChannel::loss(0, 1.0).unwrap();
        assert_eq!(ch, GaussianChannel::identity(vec![0]).unwrap());
        assert!(GaussianChannel::loss(0, 1.01).is_err());
        assert!(GaussianChannel::loss(0, -0.1).is_err());
    }

    #[test]
    fn loss_on_squeezed_state() {
        let e = 1f64.exp();
        let s = GaussianState::from_moments(DVector::zeros(2), diag2(1.0 / e, e)).unwrap();
        let out = apply_channel(&s, &GaussianChannel::loss(0, 0.5).unwrap()).unwrap();
        assert!(close(out.cov(), &diag2(0.683940, 1.859141), 1e-6));
    }

    #[test]
    fn total_loss_outputs_vacuum() {
        let s = GaussianState::coherent(3.0, -1.0).unwrap();
        let out = apply_channel(&s, &GaussianChannel::loss(0, 0.0).unwrap()).unwrap();
        assert_eq!(out, GaussianState::vacuum(1).unwrap());
    }

    #[test]
    fn amplifier_adds_quantum_limited_noise() {
        let out = apply_channel(
            &GaussianState::vacuum(1).unwrap(),
            &GaussianChannel::amplifier(0, 2.0).unwrap(),
        )
        .unwrap();
        assert!(close(out.cov(), &(DMatrix::identity(2, 2) * 3.0), 1e-12));
        assert!(GaussianChannel::amplifier(0, 0.9).is_err());
        for g in [1.0, 1.5, 4.0] {
            assert!(GaussianChannel::amplifier(0, g).unwrap().is_cp().is_cp);
        }
        let noiseless = GaussianChannel::new(
            DMatrix::identity(2, 2) * 2f64.sqrt(),
            DMatrix::zeros(2, 2),
            DVector::zeros(2),
            vec![0],
        )
        .unwrap();
        let r = noiseless.is_cp();
        assert!(!r.is_cp);
        assert!((r.min_eigenvalue + 1.0).abs() < 1e-12);
    }

    #[test]
    fn phase_sensitive_amplifier() {
        assert_eq!(
            GaussianChannel::phase_sensitive_amplifier(0, 1.0, 0.0).unwrap(),
            GaussianChannel::identity(vec![0]).unwrap()
        );
        let g = 0.5f64.exp();
        let psa = GaussianChannel::phase_sensitive_amplifier(0, g, 0.0).unwrap();
        let sq = SymplecticOp::squeeze(0, -0.5, 0.0).unwrap();
        assert!(close(psa.x(), sq.matrix(), 1e-15));
        assert_eq!(psa.y(), &DMatrix::zeros(2, 2));

        let noisy = GaussianChannel::phase_sensitive_amplifier(0, 2.0, 0.1).unwrap();
        assert!(noisy.is_cp().is_cp);
        let out = apply_channel(&GaussianState::vacuum(1).unwrap(), &noisy).unwrap();
        assert!(close(out.cov(), &diag2(4.1, 0.35), 1e-12));
        assert!(GaussianChannel::phase_sensitive_amplifier(0, 0.0, 0.0).is_err());
        assert!(GaussianChannel::phase_sensitive_amplifier(0, 2.0, -0.1).is_err());
    }

    #[test]
    fn additive_noise() {
        let zero = GaussianChannel::additive_noise(0, DMatrix::zeros(2, 2)).unwrap();
        assert_eq!(zero, GaussianChannel::identity(vec![0]).unwrap());
        let unit = GaussianChannel::additive_noise(0, DMatrix::identity(2, 2)).unwrap();
        let out = apply_channel(&GaussianState::vacuum(1).unwrap(), &unit).unwrap();
        assert!(close(out.cov(), &(DMatrix::identity(2, 2) * 2.0), 1e-15));
        let not_psd = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(GaussianChannel::additive_noise(0, not_psd).is_err());
        let aniso = DMatrix::from_row_slice(2, 2, &[0.3, 0.1, 0.1, 0.2]);
        assert!(GaussianChannel::additive_noise(0, aniso).unwrap().is_cp().is_cp);
    }

    #[test]
    fn loss_semigroup() {
        let l9 = GaussianChannel::loss(0, 0.9).unwrap();
        let l81 = GaussianChannel::loss(0, 0.81).unwrap();
        let s = GaussianState::coherent(1.5, -0.5).unwrap();
        let twice = apply_channel(&apply_channel(&s, &l9).unwrap(), &l9).unwrap();
        let once = apply_channel(&s, &l81).unwrap();
        assert!(twice.moment_distance(&once) < 1e-12);
        let composed = compose_channels(&l9, &l9).unwrap();
        assert!(close(composed.x(), l81.x(), 1e-15));
        assert!(close(composed.y(), l81.y(), 1e-15));
    }

    #[test]
    fn amplify_then_lose_half() {
        let mut s = GaussianState::vacuum(1).unwrap();
        GaussianChannel::amplifier(0, 2.0).unwrap().apply_to(&mut s).unwrap();
        GaussianChannel::loss(0, 0.5).unwrap().apply_to(&mut s).unwrap();
        assert!(close(s.cov(), &(DMatrix::identity(2, 2) * 2.0), 1e-12));
    }

    #[test]
    fn apply_refuses_non_cp() {
        let bad = GaussianChannel::new(
            DMatrix::identity(2, 2) * 2.0,
            DMatrix::zeros(2, 2),
            DVector::zeros(2),
            vec![0],
        )
        .unwrap();
        let mut s = GaussianState::vacuum(1).unwrap();
        assert!(matches!(bad.apply_to(&mut s), Err(Error::InvalidOperator(_))));
    }

    #[test]
    fn compose_with_identity() {
        let ch = GaussianChannel::amplifier(0, 1.7).unwrap();
        let id = GaussianChannel::identity(vec![0]).unwrap();
        assert_eq!(compose_channels(&id, &ch).unwrap(), ch);
        let other = GaussianChannel::loss(1, 0.5).unwrap();
        assert!(matches!(compose_channels(&ch, &other), Err(Error::Wiring(_))));
    }
}
