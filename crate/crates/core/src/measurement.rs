//! Gaussian measurements with exact conditional updates.
//!
//! Every measurement removes the measured modes from the returned state;
//! the remaining modes keep their relative order.
//!
//! Outcome densities are normalized so that homodyne detection of the
//! vacuum is a standard normal (variance 1, matching the vacuum-unit
//! covariance convention). A general-dyne measurement with measurement
//! covariance `Σ_m` has outcomes distributed as `N(r_B, V_B + Σ_m)`;
//! heterodyne is the case `Σ_m = I`, and its outcome `m` corresponds to the
//! coherent state with quadrature means `m`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::channel::GaussianChannel;
use crate::error::{Error, Result};
use crate::linalg;
use crate::state::{count_evolution, GaussianState};
use crate::symplectic::SymplecticOp;

/// Measurement covariance used for the squeezed-limit homodyne
/// construction, `diag(ε, 1/ε)`.
pub const HOMODYNE_LIMIT_EPSILON: f64 = 1e-10;

/// Where a measurement outcome comes from.
pub enum OutcomeSource<'a> {
    Sample(&'a mut dyn RngCore),
    /// A fixed outcome vector, for replay and testing.
    Forced(&'a [f64]),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasurementKind {
    Homodyne,
    Heterodyne,
    GeneralDyne,
    VacuumProjection,
    PhotonCount,
}

impl MeasurementKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Homodyne => "homodyne",
            Self::Heterodyne => "heterodyne",
            Self::GeneralDyne => "general_dyne",
            Self::VacuumProjection => "vacuum_projection",
            Self::PhotonCount => "photon_count",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Values(Vec<f64>),
    /// The vacuum-projection branch of a threshold detector.
    NoAbsorption,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub label: String,
    pub kind: MeasurementKind,
    pub outcome: Outcome,
    /// Probability density at a continuous outcome, or the probability of
    /// the branch for discrete outcomes.
    pub density_or_prob: f64,
}

impl MeasurementRecord {
    pub fn values(&self) -> Option<&[f64]> {
        match &self.outcome {
            Outcome::Values(v) => Some(v),
            Outcome::NoAbsorption => None,
        }
    }
}

/// Multivariate normal draw `mean + L z` with `L Lᵀ = cov` from an
/// eigendecomposition, so singular covariances are accepted.
pub fn sample_outcome(
    rng: &mut dyn RngCore,
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
) -> Result<DVector<f64>> {
    if cov.shape() != (mean.len(), mean.len()) {
        return Err(Error::InvalidArgument("mean and covariance sizes differ".into()));
    }
    let factor = linalg::psd_factor(cov, 1e-10 * linalg::max_abs(cov).max(1.0))?;
    let z = DVector::from_fn(mean.len(), |_, _| StandardNormal.sample(rng));
    Ok(mean + factor * z)
}

/// Density of `N(mean, cov)` at `x` for a positive definite `cov`.
pub fn normal_density(x: &DVector<f64>, mean: &DVector<f64>, cov: &DMatrix<f64>) -> Result<f64> {
    let chol = cov
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("outcome covariance is not positive definite".into()))?;
    let diff = x - mean;
    let quad = diff.dot(&chol.solve(&diff));
    let k = x.len() as f64;
    let log_det: f64 = chol.l().diagonal().iter().map(|v| 2.0 * v.ln()).sum();
    Ok((-0.5 * (quad + log_det + k * (2.0 * PI).ln())).exp())
}

/// Conditions on the measured quadratures `measured` with
/// `V_A ← V_A − C Σ⁺ Cᵀ`, `r_A ← r_A + C Σ⁺ innovation`, and drops them.
fn condition(
    state: &GaussianState,
    modes: &[usize],
    sigma_plus: &DMatrix<f64>,
    innovation: &DVector<f64>,
) -> GaussianState {
    count_evolution();
    let kept: Vec<usize> = (0..state.n_modes()).filter(|m| !modes.contains(m)).collect();
    if kept.is_empty() {
        return GaussianState::empty();
    }
    let a = linalg::quadrature_indices(&kept);
    let b = linalg::quadrature_indices(modes);
    let c = linalg::select_submatrix(state.cov(), &a, &b);
    let gain = &c * sigma_plus;
    let va = linalg::select_submatrix(state.cov(), &a, &a) - &gain * c.transpose();
    let va = (&va + va.transpose()) * 0.5;
    let ra = linalg::select_subvector(state.mean(), &a) + gain * innovation;
    GaussianState::from_parts_unchecked(ra, va)
}

fn outcome_vector(source: OutcomeSource<'_>, mean: &DVector<f64>, cov: &DMatrix<f64>) -> Result<DVector<f64>> {
    match source {
        OutcomeSource::Sample(rng) => sample_outcome(rng, mean, cov),
        OutcomeSource::Forced(values) => {
            if values.len() != mean.len() {
                return Err(Error::InvalidArgument(format!(
                    "forced outcome has {} components, measurement produces {}",
                    values.len(),
                    mean.len()
                )));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument("forced outcome must be finite".into()));
            }
            Ok(DVector::from_column_slice(values))
        }
    }
}

/// General-dyne measurement of `modes` with measurement covariance
/// `meas_cov` (2k×2k, symmetric PSD).
pub fn general_dyne(
    state: &GaussianState,
    modes: &[usize],
    meas_cov: &DMatrix<f64>,
    source: OutcomeSource<'_>,
    label: &str,
) -> Result<(MeasurementRecord, GaussianState)> {
    state.check_modes(modes)?;
    if modes.is_empty() {
        return Err(Error::Wiring("measurement needs at least one mode".into()));
    }
    let b = linalg::quadrature_indices(modes);
    if meas_cov.shape() != (b.len(), b.len()) {
        return Err(Error::InvalidArgument(format!(
            "measurement covariance must be {0}x{0}",
            b.len()
        )));
    }
    if linalg::max_asymmetry(meas_cov) > 1e-12 || linalg::min_eigenvalue_symmetric(meas_cov) < -1e-10 {
        return Err(Error::InvalidArgument(
            "measurement covariance must be symmetric positive semidefinite".into(),
        ));
    }
    let rb = linalg::select_subvector(state.mean(), &b);
    let sigma = linalg::select_submatrix(state.cov(), &b, &b) + meas_cov;
    let sigma = (&sigma + sigma.transpose()) * 0.5;
    let eig = sigma.clone().symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    if !(lo > 1e-14 * hi.max(1.0)) {
        return Err(Error::Numerical(format!(
            "outcome covariance is singular (eigenvalues {lo:e}..{hi:e})"
        )));
    }
    let m = outcome_vector(source, &rb, &sigma)?;
    let density = normal_density(&m, &rb, &sigma)?;
    // Cholesky keeps full relative accuracy on graded matrices such as the
    // diag(ε, 1/ε) measurement of the squeezed-limit homodyne, where an
    // eigendecomposition loses digits in proportion to the largest entry.
    let sigma_inv = match sigma.clone().cholesky() {
        Some(c) => c.inverse(),
        None => linalg::pseudo_inverse_symmetric(&sigma, 0.0),
    };
    let post = condition(state, modes, &sigma_inv, &(&m - &rb));
    let kind = if modes.len() == 1 && *meas_cov == DMatrix::identity(2, 2) {
        MeasurementKind::Heterodyne
    } else {
        MeasurementKind::GeneralDyne
    };
    let record = MeasurementRecord {
        label: label.to_string(),
        kind,
        outcome: Outcome::Values(m.iter().copied().collect()),
        density_or_prob: density,
    };
    Ok((record, post))
}

/// Heterodyne (coherent-state projection) of one mode.
pub fn heterodyne(
    state: &GaussianState,
    mode: usize,
    source: OutcomeSource<'_>,
    label: &str,
) -> Result<(MeasurementRecord, GaussianState)> {
    general_dyne(state, &[mode], &DMatrix::identity(2, 2), source, label)
}

/// Loss followed by a rotation that brings the quadrature
/// `x cos θ + p sin θ` onto `x`.
fn prepare_homodyne(
    state: &GaussianState,
    mode: usize,
    angle: f64,
    efficiency: f64,
) -> Result<GaussianState> {
    if !(efficiency > 0.0 && efficiency <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "detector efficiency must lie in (0, 1], got {efficiency}"
        )));
    }
    if !angle.is_finite() {
        return Err(Error::InvalidArgument("homodyne angle must be finite".into()));
    }
    state.check_modes(&[mode])?;
    let mut work = state.clone();
    if efficiency < 1.0 {
        GaussianChannel::loss(mode, efficiency)?.apply_to(&mut work)?;
    }
    if angle != 0.0 {
        SymplecticOp::phase_shift(mode, angle)?.apply_to(&mut work)?;
    }
    Ok(work)
}

/// Homodyne detection of `x cos θ + p sin θ` on `mode` with a detector of
/// the given efficiency (modelled as loss before an ideal detector).
///
/// The conditional update uses the pseudo-inverse of `Π V_B Π`, with `Π`
/// projecting onto the measured quadrature.
pub fn homodyne(
    state: &GaussianState,
    mode: usize,
    angle: f64,
    efficiency: f64,
    source: OutcomeSource<'_>,
    label: &str,
) -> Result<(MeasurementRecord, GaussianState)> {
    let work = prepare_homodyne(state, mode, angle, efficiency)?;
    let (ix, ip) = (2 * mode, 2 * mode + 1);
    let mean_x = work.mean()[ix];
    let var_x = work.cov()[(ix, ix)];
    if !(var_x > 1e-300) {
        return Err(Error::Numerical(format!(
            "measured quadrature has non-positive variance {var_x:e}"
        )));
    }
    let x = outcome_vector(
        source,
        &DVector::from_element(1, mean_x),
        &DMatrix::from_element(1, 1, var_x),
    )?[0];
    let density = (-(x - mean_x).powi(2) / (2.0 * var_x)).exp() / (2.0 * PI * var_x).sqrt();

    let vb = linalg::select_submatrix(work.cov(), &[ix, ip], &[ix, ip]);
    let proj = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0]));
    let sigma_plus = linalg::pseudo_inverse_symmetric(&(&proj * vb * &proj), 1e-14);
    let innovation = DVector::from_vec(vec![x - mean_x, 0.0]);
    let post = condition(&work, &[mode], &sigma_plus, &innovation);
    let record = MeasurementRecord {
        label: label.to_string(),
        kind: MeasurementKind::Homodyne,
        outcome: Outcome::Values(vec![x]),
        density_or_prob: density,
    };
    Ok((record, post))
}

/// Second homodyne implementation: general-dyne with measurement
/// covariance `diag(ε, 1/ε)` on the rotated mode, forced to outcome
/// `(x, ⟨p⟩)`. Agrees with [`homodyne`] up to O(ε).
pub fn homodyne_squeezed_limit(
    state: &GaussianState,
    mode: usize,
    angle: f64,
    efficiency: f64,
    x: f64,
) -> Result<GaussianState> {
    let work = prepare_homodyne(state, mode, angle, efficiency)?;
    let eps = HOMODYNE_LIMIT_EPSILON;
    let meas_cov = DMatrix::from_diagonal(&DVector::from_vec(vec![eps, 1.0 / eps]));
    let forced = [x, work.mean()[2 * mode + 1]];
    let (_, post) = general_dyne(&work, &[mode], &meas_cov, OutcomeSource::Forced(&forced), "")?;
    Ok(post)
}

/// Probability that threshold detectors on `modes` all register no
/// absorption: the overlap of the reduced state with the vacuum,
/// `2^k det(V_B + I)^{−1/2} exp(−½ r_Bᵀ (V_B + I)^{−1} r_B)`.
pub fn vacuum_projection_probability(state: &GaussianState, modes: &[usize]) -> Result<f64> {
    state.check_modes(modes)?;
    if modes.is_empty() {
        return Err(Error::Wiring("vacuum projection needs at least one mode".into()));
    }
    let b = linalg::quadrature_indices(modes);
    let rb = linalg::select_subvector(state.mean(), &b);
    let k = b.len();
    let sigma = linalg::select_submatrix(state.cov(), &b, &b) + DMatrix::<f64>::identity(k, k);
    let chol = sigma
        .cholesky()
        .ok_or_else(|| Error::Numerical("V_B + I is not positive definite".into()))?;
    let log_det: f64 = chol.l().diagonal().iter().map(|v| 2.0 * v.ln()).sum();
    let quad = rb.dot(&chol.solve(&rb));
    // The overlap never exceeds 1; rounding on near-vacuum states can
    // push the formula a few ulps above it.
    Ok(((modes.len() as f64) * 2f64.ln() - 0.5 * log_det - 0.5 * quad).exp().min(1.0))
}

/// Follows the no-absorption branch of threshold detection on `modes`:
/// projection onto the vacuum, i.e. heterodyne forced to outcome 0.
pub fn condition_on_no_absorption(
    state: &GaussianState,
    modes: &[usize],
    label: &str,
) -> Result<(MeasurementRecord, GaussianState)> {
    let probability = vacuum_projection_probability(state, modes)?;
    let zeros = vec![0.0; 2 * modes.len()];
    let k = zeros.len();
    let (_, post) = general_dyne(
        state,
        modes,
        &DMatrix::identity(k, k),
        OutcomeSource::Forced(&zeros),
        label,
    )?;
    let record = MeasurementRecord {
        label: label.to_string(),
        kind: MeasurementKind::VacuumProjection,
        outcome: Outcome::NoAbsorption,
        density_or_prob: probability,
    };
    Ok((record, post))
}

/// The absorption branch is not a Gaussian CP map; the Gaussian engine
/// always refuses it. Use the Fock oracle for small instances.
pub fn condition_on_absorption(
    _state: &GaussianState,
    modes: &[usize],
    label: &str,
) -> Result<(MeasurementRecord, GaussianState)> {
    Err(Error::Refusal {
        node: format!("{label} (modes {modes:?})"),
        reason: "conditioning on the absorption outcome is not a Gaussian CP map".into(),
    })
}
