//! Symplectic (linear optics and squeezing) operations with displacement.
//!
//! Sign conventions follow the Fock-space generators used by the oracle:
//! a phase shift by θ maps `a → e^{−iθ} a`, a beamsplitter is
//! `exp θ(e^{iφ} a₁a₂† − e^{−iφ} a₁†a₂)`, single-mode squeezing is
//! `exp (r/2)(e^{−2iφ} a² − e^{2iφ} a†²)` and two-mode squeezing is
//! `exp r(a₁a₂ − a₁†a₂†)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{ensure_finite, Error, Result};
use crate::linalg;
use crate::state::GaussianState;

/// Tolerance for `s Ω sᵀ = Ω` on constructed operators.
pub const SYMPLECTIC_TOL: f64 = 1e-12;

/// A symplectic matrix plus displacement acting on an ordered set of modes.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticOp {
    s: DMatrix<f64>,
    d: DVector<f64>,
    modes: Vec<usize>,
}

pub(crate) fn check_distinct(modes: &[usize]) -> Result<()> {
    if modes.is_empty() {
        return Err(Error::Wiring("operator must act on at least one mode".into()));
    }
    for (i, m) in modes.iter().enumerate() {
        if modes[..i].contains(m) {
            return Err(Error::Wiring(format!("mode {m} listed twice")));
        }
    }
    Ok(())
}

impl SymplecticOp {
    /// Wraps raw parts. Shapes and mode distinctness are checked here;
    /// symplecticity is checked when the operator is applied.
    pub fn new(s: DMatrix<f64>, d: DVector<f64>, modes: Vec<usize>) -> Result<Self> {
        check_distinct(&modes)?;
        let dim = 2 * modes.len();
        if s.shape() != (dim, dim) || d.len() != dim {
            return Err(Error::InvalidArgument(format!(
                "operator on {} modes needs a {dim}x{dim} matrix and length-{dim} displacement",
                modes.len()
            )));
        }
        ensure_finite("symplectic matrix", s.as_slice())?;
        ensure_finite("displacement", d.as_slice())?;
        Ok(Self { s, d, modes })
    }

    pub fn identity(modes: Vec<usize>) -> Result<Self> {
        let dim = 2 * modes.len();
        Self::new(DMatrix::identity(dim, dim), DVector::zeros(dim), modes)
    }

    /// Phase shifter: `(x, p) → (x cos θ + p sin θ, −x sin θ + p cos θ)`.
    pub fn phase_shift(mode: usize, theta: f64) -> Result<Self> {
        ensure_finite("theta", &[theta])?;
        Self::new(linalg::rotation(-theta), DVector::zeros(2), vec![mode])
    }

    /// Beamsplitter with transmissivity `cos²θ` and relative phase `φ`.
    pub fn beamsplitter(m1: usize, m2: usize, theta: f64, phi: f64) -> Result<Self> {
        ensure_finite("beamsplitter angles", &[theta, phi])?;
        let (st, ct) = theta.sin_cos();
        let mut s = DMatrix::identity(4, 4) * ct;
        let r_plus = linalg::rotation(phi) * st;
        let r_minus = linalg::rotation(-phi) * (-st);
        s.view_mut((0, 2), (2, 2)).copy_from(&r_minus);
        s.view_mut((2, 0), (2, 2)).copy_from(&r_plus);
        Self::new(s, DVector::zeros(4), vec![m1, m2])
    }

    /// Single-mode squeezer; for `φ = 0` the matrix is `diag(e^{−r}, e^{r})`.
    pub fn squeeze(mode: usize, r: f64, phi: f64) -> Result<Self> {
        ensure_finite("squeeze parameters", &[r, phi])?;
        let (ch, sh) = (r.cosh(), r.sinh());
        let (s2, c2) = (2.0 * phi).sin_cos();
        let s = DMatrix::from_row_slice(2, 2, &[ch - sh * c2, -sh * s2, -sh * s2, ch + sh * c2]);
        Self::new(s, DVector::zeros(2), vec![mode])
    }

    pub fn two_mode_squeeze(m1: usize, m2: usize, r: f64) -> Result<Self> {
        ensure_finite("r", &[r])?;
        let (ch, sh) = (r.cosh(), r.sinh());
        #[rustfmt::skip]
        let s = DMatrix::from_row_slice(4, 4, &[
            ch, 0.0, -sh, 0.0,
            0.0, ch, 0.0, sh,
            -sh, 0.0, ch, 0.0,
            0.0, sh, 0.0, ch,
        ]);
        Self::new(s, DVector::zeros(4), vec![m1, m2])
    }

    pub fn displace(mode: usize, dx: f64, dp: f64) -> Result<Self> {
        ensure_finite("displacement", &[dx, dp])?;
        Self::new(DMatrix::identity(2, 2), DVector::from_vec(vec![dx, dp]), vec![mode])
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn displacement(&self) -> &DVector<f64> {
        &self.d
    }

    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    /// `max |s Ω sᵀ − Ω|`.
    pub fn symplectic_residual(&self) -> f64 {
        let omega = linalg::symplectic_form(self.modes.len());
        linalg::max_abs(&(&self.s * &omega * self.s.transpose() - omega))
    }

    fn check_symplectic(&self) -> Result<()> {
        let residual = self.symplectic_residual();
        // Long compositions grow the entries; scale the slack with them.
        let scale = linalg::max_abs(&self.s).max(1.0).powi(2);
        if residual > SYMPLECTIC_TOL * scale {
            return Err(Error::InvalidOperator(format!(
                "matrix is not symplectic (residual {residual:e})"
            )));
        }
        Ok(())
    }

    /// Re-expresses the operator on `modes`, a superset of its own modes,
    /// acting as the identity on the extra ones.
    pub fn embed(&self, modes: &[usize]) -> Result<Self> {
        check_distinct(modes)?;
        let pos = positions(&self.modes, modes)?;
        let dim = 2 * modes.len();
        let mut s = DMatrix::identity(dim, dim);
        let mut d = DVector::zeros(dim);
        let idx = linalg::quadrature_indices(&pos);
        for (a, &i) in idx.iter().enumerate() {
            d[i] = self.d[a];
            for (b, &j) in idx.iter().enumerate() {
                s[(i, j)] = self.s[(a, b)];
            }
        }
        Self::new(s, d, modes.to_vec())
    }

    /// Applies the operator to `state` in place.
    pub fn apply_to(&self, state: &mut GaussianState) -> Result<()> {
        state.check_modes(&self.modes)?;
        self.check_symplectic()?;
        let idx = linalg::quadrature_indices(&self.modes);
        state.apply_local_affine(&idx, &self.s, None, &self.d);
        Ok(())
    }
}

/// Index of each of `inner`'s modes within `outer`.
pub(crate) fn positions(inner: &[usize], outer: &[usize]) -> Result<Vec<usize>> {
    inner
        .iter()
        .map(|m| {
            outer
                .iter()
                .position(|o| o == m)
                .ok_or_else(|| Error::Wiring(format!("mode {m} missing from target mode set")))
        })
        .collect()
}

/// Returns `op` applied to a copy of `state`.
pub fn apply_symplectic(state: &GaussianState, op: &SymplecticOp) -> Result<GaussianState> {
    let mut out = state.clone();
    op.apply_to(&mut out)?;
    Ok(out)
}

/// `b` then `a`: `s = s_a s_b`, `d = s_a d_b + d_a`. Both operators must act
/// on the same set of modes (their orders may differ); the result uses
/// `a`'s mode order.
pub fn compose(a: &SymplecticOp, b: &SymplecticOp) -> Result<SymplecticOp> {
    if a.modes.len() != b.modes.len() {
        return Err(Error::Wiring("composed operators act on different mode sets".into()));
    }
    let b = b.embed(&a.modes)?;
    SymplecticOp::new(&a.s * &b.s, &a.s * &b.d + &a.d, a.modes.clone())
}
