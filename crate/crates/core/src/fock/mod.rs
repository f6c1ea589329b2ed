//! Brute-force truncated Fock-space simulator for up to three modes.
//!
//! States live on the product number basis with a uniform per-mode cutoff
//! `D` (levels `0..D`). A state starts as a pure vector and switches to a
//! dense density matrix at the first operation that can mix it. Gates are
//! exponentials of their ladder-operator generators, loss and amplification
//! use Kraus operators, and measurements are projections. The oracle shares
//! the quadrature convention of the Gaussian engine (`x = a + a†`,
//! `p = −i(a − a†)`) and its gate sign conventions, so moments can be
//! compared entry by entry.
//!
//! Truncation is never hidden: every state tracks the largest population
//! seen in the top two levels of any mode and the trace that leaked out of
//! the truncated space.

mod compare;
pub mod hermite;
pub mod operators;

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, RngCore};

use crate::error::{Error, Result};
use operators::{Ladder, LocalOp, Term};

pub use compare::{compare, ComparisonReport, Verdict};

pub const MAX_MODES: usize = 3;
/// Largest Hilbert-space dimension `D^n` accepted.
pub const MAX_DIM: usize = 20_000;
/// Largest dimension for which a dense density matrix is formed.
pub const MAX_MIXED_DIM: usize = 4096;
pub const DEFAULT_CUTOFF: usize = 25;
/// Top-level population above which a state is considered truncation
/// unhealthy.
pub const HEALTH_THRESHOLD: f64 = 1e-9;
/// Homodyne grids must lie inside `[−GRID_LIMIT, GRID_LIMIT]`.
pub const GRID_LIMIT: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationHealth {
    /// Largest population observed in the top two levels of any mode.
    pub top_population: f64,
    /// Trace lost to truncation, accumulated over the state's history.
    pub leaked_trace: f64,
    pub healthy: bool,
}

#[derive(Debug, Clone)]
enum Repr {
    /// `ρ = |ψ⟩⟨ψ|`.
    Pure(Vec<Complex64>),
    /// Row-major `dim × dim`.
    Mixed(Vec<Complex64>),
}

#[derive(Debug, Clone)]
pub struct FockState {
    n_modes: usize,
    cutoff: usize,
    repr: Repr,
    peak_top: f64,
    leaked: f64,
}

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

impl FockState {
    fn check_size(n_modes: usize, cutoff: usize) -> Result<usize> {
        if !(1..=MAX_MODES).contains(&n_modes) {
            return Err(Error::InvalidArgument(format!(
                "the Fock oracle handles 1 to {MAX_MODES} modes, got {n_modes}"
            )));
        }
        if cutoff < 2 {
            return Err(Error::InvalidArgument("cutoff must be at least 2".into()));
        }
        match cutoff.checked_pow(n_modes as u32) {
            Some(dim) if dim <= MAX_DIM => Ok(dim),
            _ => Err(Error::InvalidArgument(format!(
                "Hilbert dimension {cutoff}^{n_modes} exceeds {MAX_DIM}"
            ))),
        }
    }

    pub fn vacuum(n_modes: usize, cutoff: usize) -> Result<Self> {
        Self::number_state(cutoff, &vec![0; n_modes])
    }

    /// Product number state `|n₁, n₂, …⟩`.
    pub fn number_state(cutoff: usize, occupations: &[usize]) -> Result<Self> {
        let dim = Self::check_size(occupations.len(), cutoff)?;
        if let Some(&n) = occupations.iter().find(|&&n| n >= cutoff) {
            return Err(Error::InvalidArgument(format!(
                "occupation {n} does not fit below cutoff {cutoff}"
            )));
        }
        let mut psi = vec![zero(); dim];
        psi[operators::from_digits(occupations, cutoff)] = one();
        let mut s = Self {
            n_modes: occupations.len(),
            cutoff,
            repr: Repr::Pure(psi),
            peak_top: 0.0,
            leaked: 0.0,
        };
        s.peak_top = s.top_population();
        Ok(s)
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn dim(&self) -> usize {
        self.cutoff.pow(self.n_modes as u32)
    }

    pub fn is_pure_representation(&self) -> bool {
        matches!(self.repr, Repr::Pure(_))
    }

    /// `⟨i|ρ|j⟩` for flat basis indices (mode 0 is the most significant digit).
    pub fn element(&self, i: usize, j: usize) -> Complex64 {
        match &self.repr {
            Repr::Pure(psi) => psi[i] * psi[j].conj(),
            Repr::Mixed(rho) => rho[i * self.dim() + j],
        }
    }

    fn population(&self, i: usize) -> f64 {
        match &self.repr {
            Repr::Pure(psi) => psi[i].norm_sqr(),
            Repr::Mixed(rho) => rho[i * self.dim() + i].re,
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.population(i)).sum()
    }

    /// The full density matrix. Intended for small states.
    pub fn density_matrix(&self) -> DMatrix<Complex64> {
        let dim = self.dim();
        DMatrix::from_fn(dim, dim, |i, j| self.element(i, j))
    }

    /// Largest deviation from Hermiticity.
    pub fn hermiticity_residual(&self) -> f64 {
        let rho = self.density_matrix();
        (&rho - rho.adjoint()).iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Smallest eigenvalue of the density matrix.
    pub fn min_eigenvalue(&self) -> f64 {
        self.density_matrix().symmetric_eigenvalues().min()
    }

    fn stride(&self, mode: usize) -> usize {
        self.cutoff.pow((self.n_modes - 1 - mode) as u32)
    }

    fn digit(&self, index: usize, mode: usize) -> usize {
        (index / self.stride(mode)) % self.cutoff
    }

    /// Population of the top two levels, maximized over modes.
    pub fn top_population(&self) -> f64 {
        let edge = self.cutoff.saturating_sub(2);
        (0..self.n_modes)
            .map(|m| {
                (0..self.dim())
                    .filter(|&i| self.digit(i, m) >= edge)
                    .map(|i| self.population(i))
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    pub fn health(&self) -> TruncationHealth {
        self.health_with_threshold(HEALTH_THRESHOLD)
    }

    pub fn health_with_threshold(&self, threshold: f64) -> TruncationHealth {
        TruncationHealth {
            top_population: self.peak_top,
            leaked_trace: self.leaked,
            healthy: self.peak_top <= threshold && self.leaked <= threshold,
        }
    }

    fn check_modes(&self, modes: &[usize]) -> Result<()> {
        for (i, &m) in modes.iter().enumerate() {
            if m >= self.n_modes {
                return Err(Error::Wiring(format!(
                    "mode {m} out of range for {} modes",
                    self.n_modes
                )));
            }
            if modes[..i].contains(&m) {
                return Err(Error::Wiring(format!("mode {m} listed twice")));
            }
        }
        Ok(())
    }

    /// Flat offsets of every local basis state of `modes`, and the flat
    /// indices of every basis state whose digits on `modes` are zero.
    fn layout(&self, modes: &[usize]) -> (Vec<usize>, Vec<usize>) {
        let k = modes.len();
        let local_dim = self.cutoff.pow(k as u32);
        let mut digits = vec![0; k];
        let offsets = (0..local_dim)
            .map(|l| {
                operators::to_digits(l, k, self.cutoff, &mut digits);
                modes
                    .iter()
                    .zip(&digits)
                    .map(|(&m, &d)| d * self.stride(m))
                    .sum()
            })
            .collect();
        let bases = (0..self.dim())
            .filter(|&i| modes.iter().all(|&m| self.digit(i, m) == 0))
            .collect();
        (offsets, bases)
    }

    /// Converts to a dense density matrix.
    fn make_mixed(&mut self) -> Result<()> {
        if let Repr::Pure(psi) = &self.repr {
            let dim = psi.len();
            if dim > MAX_MIXED_DIM {
                return Err(Error::InvalidArgument(format!(
                    "a mixed state of dimension {dim} exceeds the oracle's limit of {MAX_MIXED_DIM}; \
                     lower the cutoff"
                )));
            }
            let mut rho = vec![zero(); dim * dim];
            for (row, a) in rho.chunks_exact_mut(dim).zip(psi) {
                for (r, b) in row.iter_mut().zip(psi) {
                    *r = a * b.conj();
                }
            }
            self.repr = Repr::Mixed(rho);
        }
        Ok(())
    }

    fn mixed(&self) -> Result<Self> {
        let mut s = self.clone();
        s.make_mixed()?;
        Ok(s)
    }

    /// `dst += op · src` for a row-major matrix with rows of length
    /// `width`, `op` acting on the local modes of `layout`.
    fn left_apply_into(
        width: usize,
        op: &LocalOp,
        layout: &(Vec<usize>, Vec<usize>),
        src: &[Complex64],
        dst: &mut [Complex64],
    ) {
        let (offsets, bases) = layout;
        for &base in bases {
            for &(r, c, v) in &op.entries {
                let d = (base + offsets[r]) * width;
                let s = (base + offsets[c]) * width;
                for (o, x) in dst[d..d + width].iter_mut().zip(&src[s..s + width]) {
                    *o += v * x;
                }
            }
        }
    }

    /// Replaces the state data and records truncation losses.
    fn update(&mut self, repr: Repr) {
        let before = self.trace();
        self.repr = repr;
        self.leaked += (before - self.trace()).max(0.0);
        self.peak_top = self.peak_top.max(self.top_population());
    }

    /// Applies a local unitary (or any single operator) `U ρ U†`.
    pub fn apply_local(&mut self, op: &LocalOp, modes: &[usize]) -> Result<()> {
        self.apply_operators(std::slice::from_ref(op), modes)
    }

    /// `Σ_k K_k ρ K_k†` on the listed modes.
    fn apply_operators(&mut self, ops: &[LocalOp], modes: &[usize]) -> Result<()> {
        self.check_modes(modes)?;
        if ops.iter().any(|op| op.cutoff != self.cutoff || op.n_local != modes.len()) {
            return Err(Error::InvalidArgument("operator shape does not match the state".into()));
        }
        crate::state::count_evolution();
        let layout = self.layout(modes);
        let dim = self.dim();
        if let (Repr::Pure(psi), [op]) = (&self.repr, ops) {
            let mut out = vec![zero(); dim];
            Self::left_apply_into(1, op, &layout, psi, &mut out);
            self.update(Repr::Pure(out));
            return Ok(());
        }
        self.make_mixed()?;
        let r = layout.1.len();
        let blockwise_cost: usize = ops.iter().map(|op| op.entries.len().pow(2)).sum::<usize>() * r * r;
        let rowwise_cost: usize = ops.iter().map(|op| 2 * r * op.entries.len() * dim + 3 * dim * dim).sum();
        if modes.len() == 1 && blockwise_cost < rowwise_cost {
            let d = self.cutoff;
            self.map_blocks(modes[0], |block, out| {
                for op in ops {
                    for &(r1, c1, v1) in &op.entries {
                        for &(r2, c2, v2) in &op.entries {
                            out[r1 * d + r2] += v1 * block[c1 * d + c2] * v2.conj();
                        }
                    }
                }
            });
            return Ok(());
        }
        let Repr::Mixed(rho) = &self.repr else { unreachable!() };
        // K ρ K† = K (K ρ)† for Hermitian ρ keeps both products row-contiguous.
        let mut acc = vec![zero(); dim * dim];
        let mut scratch = vec![zero(); dim * dim];
        let mut scratch_t = vec![zero(); dim * dim];
        for op in ops {
            scratch.fill(zero());
            Self::left_apply_into(dim, op, &layout, rho, &mut scratch);
            adjoint_into(dim, &scratch, &mut scratch_t);
            Self::left_apply_into(dim, op, &layout, &scratch_t, &mut acc);
        }
        self.update(Repr::Mixed(acc));
        Ok(())
    }

    /// Rewrites every `D × D` block of a mixed state that couples `mode`'s
    /// levels at fixed levels of the other modes. `f` receives the block
    /// (row-major) and a zeroed output buffer.
    fn map_blocks(&mut self, mode: usize, mut f: impl FnMut(&[Complex64], &mut [Complex64])) {
        let Repr::Mixed(rho) = &self.repr else {
            unreachable!("map_blocks needs a mixed state")
        };
        let d = self.cutoff;
        let dim = self.dim();
        let s = self.stride(mode);
        let (_, bases) = self.layout(&[mode]);
        let mut out = vec![zero(); dim * dim];
        let mut block = vec![zero(); d * d];
        let mut result = vec![zero(); d * d];
        for &bi in &bases {
            for &bj in &bases {
                for a in 0..d {
                    for b in 0..d {
                        block[a * d + b] = rho[(bi + a * s) * dim + bj + b * s];
                    }
                }
                result.fill(zero());
                f(&block, &mut result);
                for a in 0..d {
                    for b in 0..d {
                        out[(bi + a * s) * dim + bj + b * s] = result[a * d + b];
                    }
                }
            }
        }
        self.update(Repr::Mixed(out));
    }

    /// `Σ_k K_k ρ K_k†` on one mode.
    pub fn apply_kraus(&mut self, ops: &[LocalOp], mode: usize) -> Result<()> {
        self.apply_operators(ops, &[mode])
    }

    fn apply_generator(&mut self, terms: &[Term], modes: &[usize]) -> Result<()> {
        self.check_modes(modes)?;
        let u = operators::unitary(terms, modes.len(), self.cutoff)?;
        self.apply_local(&u, modes)
    }

    /// `exp(−iθ a†a)`.
    pub fn phase_shift(&mut self, mode: usize, theta: f64) -> Result<()> {
        finite(&[theta])?;
        self.apply_generator(&[Term::new(Complex64::new(0.0, -theta), &[(0, Ladder::Number)])], &[mode])
    }

    /// Displacement by quadrature amounts `(dx, dp)`, i.e. `α = (dx + i dp)/2`.
    pub fn displace(&mut self, mode: usize, dx: f64, dp: f64) -> Result<()> {
        finite(&[dx, dp])?;
        let alpha = Complex64::new(dx, dp) * 0.5;
        self.apply_generator(
            &[
                Term::new(alpha, &[(0, Ladder::Raise)]),
                Term::new(-alpha.conj(), &[(0, Ladder::Lower)]),
            ],
            &[mode],
        )
    }

    /// `exp (r/2)(e^{−2iφ} a² − e^{2iφ} a†²)`.
    pub fn squeeze(&mut self, mode: usize, r: f64, phi: f64) -> Result<()> {
        finite(&[r, phi])?;
        let c = Complex64::from_polar(0.5 * r, -2.0 * phi);
        self.apply_generator(
            &[
                Term::new(c, &[(0, Ladder::Lower), (0, Ladder::Lower)]),
                Term::new(-c.conj(), &[(0, Ladder::Raise), (0, Ladder::Raise)]),
            ],
            &[mode],
        )
    }

    /// `exp θ(e^{iφ} a₁a₂† − e^{−iφ} a₁†a₂)`.
    pub fn beamsplitter(&mut self, m1: usize, m2: usize, theta: f64, phi: f64) -> Result<()> {
        finite(&[theta, phi])?;
        let c = Complex64::from_polar(theta, phi);
        self.apply_generator(
            &[
                Term::new(c, &[(0, Ladder::Lower), (1, Ladder::Raise)]),
                Term::new(-c.conj(), &[(0, Ladder::Raise), (1, Ladder::Lower)]),
            ],
            &[m1, m2],
        )
    }

    /// `exp r(a₁a₂ − a₁†a₂†)`.
    pub fn two_mode_squeeze(&mut self, m1: usize, m2: usize, r: f64) -> Result<()> {
        finite(&[r])?;
        let c = Complex64::new(r, 0.0);
        self.apply_generator(
            &[
                Term::new(c, &[(0, Ladder::Lower), (1, Ladder::Lower)]),
                Term::new(-c, &[(0, Ladder::Raise), (1, Ladder::Raise)]),
            ],
            &[m1, m2],
        )
    }

    /// Kerr evolution `exp(−iχ (a†a)²)`.
    pub fn kerr(&mut self, mode: usize, chi: f64) -> Result<()> {
        finite(&[chi])?;
        self.apply_generator(
            &[Term::new(Complex64::new(0.0, -chi), &[(0, Ladder::Number), (0, Ladder::Number)])],
            &[mode],
        )
    }

    pub fn apply_loss(&mut self, mode: usize, eta: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidArgument(format!("loss transmissivity {eta} outside [0, 1]")));
        }
        self.apply_kraus(&operators::loss_kraus(eta, self.cutoff), mode)
    }

    pub fn apply_amplifier(&mut self, mode: usize, gain: f64) -> Result<()> {
        if !(gain.is_finite() && gain >= 1.0) {
            return Err(Error::InvalidArgument(format!("amplifier gain {gain} below 1")));
        }
        self.apply_kraus(&operators::amplifier_kraus(gain, self.cutoff), mode)
    }

    /// Random Gaussian displacements with quadrature covariance
    /// `[[yxx, yxp], [yxp, ypp]]`.
    ///
    /// The isotropic part `λ_min·I` is realized as loss `1/G` followed by
    /// amplification `G = 1 + λ_min/2`. The rank-one remainder `λ u uᵀ` is
    /// a Gaussian average of displacements `exp(−i t p_u / 2)` along `u`,
    /// done exactly in the eigenbasis of the (padded, truncated) generator
    /// `p_u`, where it multiplies `ρ` elementwise by
    /// `exp(−λ (k_a − k_b)² / 8)`.
    pub fn apply_additive_noise(&mut self, mode: usize, yxx: f64, yxp: f64, ypp: f64) -> Result<()> {
        finite(&[yxx, yxp, ypp])?;
        self.check_modes(&[mode])?;
        let y = DMatrix::from_row_slice(2, 2, &[yxx, yxp, yxp, ypp]);
        let eig = y.symmetric_eigen();
        let (lo, hi) = if eig.eigenvalues[0] <= eig.eigenvalues[1] { (0, 1) } else { (1, 0) };
        let (l_min, l_max) = (eig.eigenvalues[lo], eig.eigenvalues[hi]);
        if l_min < -1e-10 {
            return Err(Error::InvalidArgument("noise covariance is not PSD".into()));
        }
        let l_min = l_min.max(0.0);
        if l_min > 0.0 {
            let gain = 1.0 + 0.5 * l_min;
            self.apply_loss(mode, 1.0 / gain)?;
            self.apply_amplifier(mode, gain)?;
        }
        let rank_one = l_max - l_min;
        if rank_one > 0.0 {
            let angle = eig.eigenvectors[(1, hi)].atan2(eig.eigenvectors[(0, hi)]);
            self.displacement_noise(mode, rank_one, angle)?;
        }
        Ok(())
    }

    /// Averages over displacements `t·(cos ϑ, sin ϑ)` with `t ~ N(0, variance)`.
    fn displacement_noise(&mut self, mode: usize, variance: f64, angle: f64) -> Result<()> {
        self.make_mixed()?;
        crate::state::count_evolution();
        let d = self.cutoff;
        let padded = d + operators::EXPM_PADDING;
        // A displacement by i·s/2 is exp(i s x / 2), and R D(β) R† = D(β e^{iφ})
        // for R = exp(iφ n). With φ = ϑ − π/2 the noise is
        // R · E_s[exp(i s x/2) (R† ρ R) exp(−i s x/2)] · R†, and x is real
        // symmetric, so its eigenbasis is real.
        let phi = angle - std::f64::consts::FRAC_PI_2;
        let x = DMatrix::from_fn(padded, padded, |r, c| {
            if c == r + 1 {
                (c as f64).sqrt()
            } else if r == c + 1 {
                (r as f64).sqrt()
            } else {
                0.0
            }
        });
        let eig = x.symmetric_eigen();
        let k = &eig.eigenvalues;
        let v = eig.eigenvectors.rows(0, d).into_owned();
        let vt = v.transpose();
        let factor = DMatrix::from_fn(padded, padded, |a, b| (-variance * (k[a] - k[b]).powi(2) / 8.0).exp());
        let phase: Vec<Complex64> = (0..d).map(|n| Complex64::from_polar(1.0, phi * n as f64)).collect();

        let mut re = DMatrix::<f64>::zeros(d, d);
        let mut im = DMatrix::<f64>::zeros(d, d);
        self.map_blocks(mode, |block, out| {
            for a in 0..d {
                for b in 0..d {
                    let z = phase[a].conj() * block[a * d + b] * phase[b];
                    re[(a, b)] = z.re;
                    im[(a, b)] = z.im;
                }
            }
            let t_re = (&vt * &re * &v).component_mul(&factor);
            let t_im = (&vt * &im * &v).component_mul(&factor);
            let m_re = &v * t_re * &vt;
            let m_im = &v * t_im * &vt;
            for a in 0..d {
                for b in 0..d {
                    out[a * d + b] = phase[a] * Complex64::new(m_re[(a, b)], m_im[(a, b)]) * phase[b].conj();
                }
            }
        });
        Ok(())
    }

    /// `tr(ρ L₁ L₂ …)` for a product of ladder operators on modes of the
    /// state, using the truncated matrices.
    pub fn expectation(&self, ops: &[(usize, Ladder)]) -> Complex64 {
        let dim = self.dim();
        let mut digits = vec![0; self.n_modes];
        let mut total = zero();
        'col: for j in 0..dim {
            operators::to_digits(j, self.n_modes, self.cutoff, &mut digits);
            let mut coef = 1.0;
            for &(mode, op) in ops.iter().rev() {
                match operators::apply_ladder(op, mode, &mut digits, self.cutoff) {
                    Some(v) => coef *= v,
                    None => continue 'col,
                }
            }
            let i = operators::from_digits(&digits, self.cutoff);
            total += self.element(j, i) * coef;
        }
        total
    }

    /// Quadrature means and symmetrized covariance, normalized by the trace.
    pub fn moments(&self) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.n_modes;
        let tr = self.trace();
        // x = a + a†, p = −i a + i a†.
        let quad = |i: usize| -> [(usize, Ladder, Complex64); 2] {
            let m = i / 2;
            if i.is_multiple_of(2) {
                [(m, Ladder::Lower, one()), (m, Ladder::Raise, one())]
            } else {
                [(m, Ladder::Lower, Complex64::new(0.0, -1.0)), (m, Ladder::Raise, Complex64::new(0.0, 1.0))]
            }
        };
        let mean = DVector::from_fn(2 * n, |i, _| {
            quad(i)
                .iter()
                .map(|&(m, l, c)| c * self.expectation(&[(m, l)]))
                .sum::<Complex64>()
                .re
                / tr
        });
        let second = |i: usize, k: usize| -> Complex64 {
            let mut acc = zero();
            for &(m1, l1, c1) in &quad(i) {
                for &(m2, l2, c2) in &quad(k) {
                    acc += c1 * c2 * self.expectation(&[(m1, l1), (m2, l2)]);
                }
            }
            acc / tr
        };
        let mut cov = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..2 * n {
            for k in i..2 * n {
                let v = 0.5 * (second(i, k) + second(k, i)).re - mean[i] * mean[k];
                cov[(i, k)] = v;
                cov[(k, i)] = v;
            }
        }
        (mean, cov)
    }

    fn reduced_shell(&self, repr: Repr) -> Self {
        Self {
            n_modes: self.n_modes - 1,
            cutoff: self.cutoff,
            repr,
            peak_top: self.peak_top,
            leaked: self.leaked,
        }
    }

    /// `⟨v|ρ|v⟩` on `mode`, unnormalized, for a ket `v` over its levels.
    fn project_raw(&self, mode: usize, ket: &[Complex64]) -> Self {
        let s = self.stride(mode);
        let (_, bases) = self.layout(&[mode]);
        let r = bases.len();
        match &self.repr {
            Repr::Pure(psi) => {
                let out = bases
                    .iter()
                    .map(|&base| ket.iter().enumerate().map(|(n, v)| v.conj() * psi[base + n * s]).sum())
                    .collect();
                self.reduced_shell(Repr::Pure(out))
            }
            Repr::Mixed(rho) => {
                let dim = self.dim();
                let mut half = vec![zero(); r * dim];
                for (a, &base) in bases.iter().enumerate() {
                    let dst = &mut half[a * dim..(a + 1) * dim];
                    for (n, v) in ket.iter().enumerate() {
                        let src = &rho[(base + n * s) * dim..(base + n * s + 1) * dim];
                        let c = v.conj();
                        for (o, x) in dst.iter_mut().zip(src) {
                            *o += c * x;
                        }
                    }
                }
                let mut out = vec![zero(); r * r];
                for a in 0..r {
                    for (b, &base) in bases.iter().enumerate() {
                        out[a * r + b] = ket
                            .iter()
                            .enumerate()
                            .map(|(m, v)| v * half[a * dim + base + m * s])
                            .sum();
                    }
                }
                self.reduced_shell(Repr::Mixed(out))
            }
        }
    }

    fn partial_trace_raw(&self, mode: usize) -> Self {
        let s = self.stride(mode);
        let (_, bases) = self.layout(&[mode]);
        let r = bases.len();
        let mut out = vec![zero(); r * r];
        for (a, &ba) in bases.iter().enumerate() {
            for (b, &bb) in bases.iter().enumerate() {
                out[a * r + b] = (0..self.cutoff)
                    .map(|n| self.element(ba + n * s, bb + n * s))
                    .sum();
            }
        }
        self.reduced_shell(Repr::Mixed(out))
    }

    /// Normalizes a branch of `self`; returns its probability relative to
    /// the current trace.
    fn finish_branch(&self, mut branch: Self) -> Result<(f64, Self)> {
        let weight = branch.trace();
        let tr = self.trace();
        if !(weight > 0.0) {
            return Err(Error::Numerical("measurement branch has zero weight".into()));
        }
        match &mut branch.repr {
            Repr::Pure(psi) => psi.iter_mut().for_each(|v| *v /= weight.sqrt()),
            Repr::Mixed(rho) => rho.iter_mut().for_each(|v| *v /= weight),
        }
        branch.peak_top = branch.peak_top.max(branch.top_population());
        Ok((weight / tr, branch))
    }

    fn descending(&self, modes: &[usize]) -> Result<Vec<usize>> {
        self.check_modes(modes)?;
        if modes.is_empty() {
            return Err(Error::Wiring("measurement needs at least one mode".into()));
        }
        let mut sorted = modes.to_vec();
        sorted.sort_unstable_by(|a, b| b.cmp(a));
        Ok(sorted)
    }

    fn vacuum_ket(&self) -> Vec<Complex64> {
        let mut v = vec![zero(); self.cutoff];
        v[0] = one();
        v
    }

    /// No-absorption branch of threshold detectors on `modes`: probability
    /// `⟨0|ρ|0⟩` and the renormalized conditional state of the others.
    pub fn no_absorption(&self, modes: &[usize]) -> Result<(f64, Self)> {
        let mut st = self.clone();
        for m in self.descending(modes)? {
            st = st.project_raw(m, &self.vacuum_ket());
        }
        self.finish_branch(st)
    }

    /// Absorption branch (at least one detector clicks), which the Gaussian
    /// engine cannot represent.
    pub fn absorption(&self, modes: &[usize]) -> Result<(f64, Self)> {
        let order = self.descending(modes)?;
        let mut traced = self.clone();
        let mut vac = self.clone();
        for &m in &order {
            traced = traced.partial_trace_raw(m);
            vac = vac.project_raw(m, &self.vacuum_ket());
        }
        let vac = vac.mixed()?;
        let (Repr::Mixed(t), Repr::Mixed(v)) = (&mut traced.repr, &vac.repr) else {
            unreachable!()
        };
        for (t, v) in t.iter_mut().zip(v) {
            *t -= v;
        }
        self.finish_branch(traced)
    }

    /// `P(n)` for `n < cutoff` on one mode.
    pub fn photon_number_distribution(&self, mode: usize) -> Result<Vec<f64>> {
        self.check_modes(&[mode])?;
        let tr = self.trace();
        let mut p = vec![0.0; self.cutoff];
        for i in 0..self.dim() {
            p[self.digit(i, mode)] += self.population(i) / tr;
        }
        Ok(p)
    }

    pub fn condition_on_photon_number(&self, mode: usize, n: usize) -> Result<(f64, Self)> {
        self.check_modes(&[mode])?;
        if n >= self.cutoff {
            return Err(Error::InvalidArgument(format!("photon number {n} beyond cutoff")));
        }
        let mut ket = vec![zero(); self.cutoff];
        ket[n] = one();
        self.finish_branch(self.project_raw(mode, &ket))
    }

    fn rotated_for_homodyne(&self, mode: usize, angle: f64, efficiency: f64) -> Result<Self> {
        if !(efficiency > 0.0 && efficiency <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "detector efficiency must lie in (0, 1], got {efficiency}"
            )));
        }
        let mut work = self.clone();
        if efficiency < 1.0 {
            work.apply_loss(mode, efficiency)?;
        }
        if angle != 0.0 {
            work.phase_shift(mode, angle)?;
        }
        Ok(work)
    }

    fn position_ket(&self, x: f64) -> Vec<Complex64> {
        hermite::wavefunctions(self.cutoff, x)
            .into_iter()
            .map(|v| Complex64::new(v, 0.0))
            .collect()
    }

    /// Single-mode reduced density matrix of `mode`.
    pub fn reduce_to(&self, mode: usize) -> DMatrix<Complex64> {
        let d = self.cutoff;
        let s = self.stride(mode);
        let (_, bases) = self.layout(&[mode]);
        let mut out = DMatrix::zeros(d, d);
        for &base in &bases {
            for n in 0..d {
                for m in 0..d {
                    out[(n, m)] += self.element(base + n * s, base + m * s);
                }
            }
        }
        out
    }

    /// Density of homodyne outcomes `x` for the quadrature
    /// `x cos θ + p sin θ`, evaluated on `grid`.
    pub fn homodyne_density_grid(
        &self,
        mode: usize,
        angle: f64,
        efficiency: f64,
        grid: &[f64],
    ) -> Result<Vec<f64>> {
        self.check_modes(&[mode])?;
        if grid.len() < 3 {
            return Err(Error::InvalidArgument("homodyne grid needs at least 3 points".into()));
        }
        if grid.iter().any(|x| !(x.abs() <= GRID_LIMIT)) {
            return Err(Error::InvalidArgument(format!(
                "homodyne grid must lie within [-{GRID_LIMIT}, {GRID_LIMIT}]"
            )));
        }
        let work = self.rotated_for_homodyne(mode, angle, efficiency)?;
        let tr = work.trace();
        let reduced = work.reduce_to(mode);
        Ok(grid
            .iter()
            .map(|&x| {
                let phi = hermite::wavefunctions(self.cutoff, x);
                let mut acc = 0.0;
                for (n, pn) in phi.iter().enumerate() {
                    for (m, pm) in phi.iter().enumerate() {
                        acc += pn * pm * reduced[(n, m)].re;
                    }
                }
                acc / tr
            })
            .collect())
    }

    /// Homodyne outcome density at `x` and the conditional state of the
    /// remaining modes.
    pub fn condition_homodyne(
        &self,
        mode: usize,
        angle: f64,
        efficiency: f64,
        x: f64,
    ) -> Result<(f64, Self)> {
        self.check_modes(&[mode])?;
        finite(&[angle, x])?;
        let work = self.rotated_for_homodyne(mode, angle, efficiency)?;
        let raw = work.project_raw(mode, &work.position_ket(x));
        work.finish_branch(raw)
    }

    fn coherent_ket(&self, m: [f64; 2]) -> Vec<Complex64> {
        let beta = Complex64::new(m[0], m[1]) * 0.5;
        let mut v = Vec::with_capacity(self.cutoff);
        let mut c = Complex64::new((-0.5 * beta.norm_sqr()).exp(), 0.0);
        for n in 0..self.cutoff {
            if n > 0 {
                c *= beta / (n as f64).sqrt();
            }
            v.push(c);
        }
        v
    }

    /// Heterodyne density `⟨β|ρ|β⟩/(4π)` at quadrature outcome `m`
    /// (`β = (m_x + i m_p)/2`) and the conditional state.
    pub fn condition_heterodyne(&self, mode: usize, m: [f64; 2]) -> Result<(f64, Self)> {
        self.check_modes(&[mode])?;
        finite(&m)?;
        let raw = self.project_raw(mode, &self.coherent_ket(m));
        let (p, st) = self.finish_branch(raw)?;
        Ok((p / (4.0 * PI), st))
    }

    /// Draws a homodyne outcome by inverting the CDF of the density on a
    /// fine grid over `[−GRID_LIMIT, GRID_LIMIT]`.
    pub fn sample_homodyne(
        &self,
        rng: &mut dyn RngCore,
        mode: usize,
        angle: f64,
        efficiency: f64,
    ) -> Result<f64> {
        let n = 4001;
        let h = 2.0 * GRID_LIMIT / (n - 1) as f64;
        let grid: Vec<f64> = (0..n).map(|i| -GRID_LIMIT + h * i as f64).collect();
        let dens = self.homodyne_density_grid(mode, angle, efficiency, &grid)?;
        let weights: Vec<f64> = dens.windows(2).map(|w| 0.5 * (w[0] + w[1]).max(0.0) * h).collect();
        let cell = pick(rng, &weights)?;
        let u: f64 = rng.random();
        Ok(grid[cell] + u * h)
    }

    /// Draws a heterodyne outcome from the Husimi density on a grid.
    pub fn sample_heterodyne(&self, rng: &mut dyn RngCore, mode: usize) -> Result<[f64; 2]> {
        self.check_modes(&[mode])?;
        let reduced = self.reduce_to(mode);
        let tr = self.trace();
        let n = 201;
        let h = 2.0 * GRID_LIMIT / (n - 1) as f64;
        let mut weights = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let m = [-GRID_LIMIT + h * i as f64, -GRID_LIMIT + h * j as f64];
                let ket = self.coherent_ket(m);
                let mut q = zero();
                for (a, ka) in ket.iter().enumerate() {
                    for (b, kb) in ket.iter().enumerate() {
                        q += ka.conj() * reduced[(a, b)] * kb;
                    }
                }
                weights.push((q.re / tr).max(0.0));
            }
        }
        let cell = pick(rng, &weights)?;
        let (u, v): (f64, f64) = (rng.random(), rng.random());
        Ok([
            -GRID_LIMIT + h * ((cell / n) as f64 + u - 0.5),
            -GRID_LIMIT + h * ((cell % n) as f64 + v - 0.5),
        ])
    }

    pub fn sample_photon_number(&self, rng: &mut dyn RngCore, mode: usize) -> Result<usize> {
        pick(rng, &self.photon_number_distribution(mode)?)
    }
}

/// Conjugate transpose of a row-major square matrix, in cache-sized tiles.
fn adjoint_into(dim: usize, src: &[Complex64], dst: &mut [Complex64]) {
    const TILE: usize = 32;
    for i0 in (0..dim).step_by(TILE) {
        for j0 in (0..dim).step_by(TILE) {
            for i in i0..(i0 + TILE).min(dim) {
                for j in j0..(j0 + TILE).min(dim) {
                    dst[j * dim + i] = src[i * dim + j].conj();
                }
            }
        }
    }
}

fn pick(rng: &mut dyn RngCore, weights: &[f64]) -> Result<usize> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Numerical("outcome distribution has no weight".into()));
    }
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if acc >= target {
            return Ok(i);
        }
    }
    Ok(weights.len() - 1)
}

fn finite(values: &[f64]) -> Result<()> {
    crate::error::ensure_finite("parameter", values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn size_guards() {
        assert!(FockState::vacuum(0, 5).is_err());
        assert!(FockState::vacuum(4, 5).is_err());
        assert!(FockState::vacuum(1, 1).is_err());
        assert!(FockState::vacuum(3, 28).is_err());
        assert!(FockState::number_state(5, &[5]).is_err());
        let mut big = FockState::vacuum(3, 20).unwrap();
        big.squeeze(0, 0.1, 0.0).unwrap();
        assert!(big.apply_loss(0, 0.5).is_err());
    }

    #[test]
    fn vacuum_moments() {
        let (mean, cov) = FockState::vacuum(2, 6).unwrap().moments();
        assert_eq!(mean, DVector::zeros(4));
        assert_eq!(cov, DMatrix::identity(4, 4));
        for d in [2, 3, 10] {
            let (_, cov) = FockState::vacuum(1, d).unwrap().moments();
            assert_eq!(cov[(0, 0)], 1.0);
        }
    }

    #[test]
    fn single_photon_has_variance_three() {
        let (mean, cov) = FockState::number_state(10, &[1]).unwrap().moments();
        assert_eq!(mean, DVector::zeros(2));
        assert!((cov[(0, 0)] - 3.0).abs() < 1e-14);
        assert!((cov[(1, 1)] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn displaced_vacuum_is_poissonian() {
        let mut s = FockState::vacuum(1, 25).unwrap();
        s.displace(0, 2.0, 0.0).unwrap();
        assert!((s.element(0, 0).re - (-1f64).exp()).abs() < 1e-10);
        let (mean, cov) = s.moments();
        assert!((mean[0] - 2.0).abs() < 1e-10 && mean[1].abs() < 1e-10);
        assert!((cov - DMatrix::identity(2, 2)).amax() < 1e-9);
        assert!(s.health().healthy);
    }

    #[test]
    fn zero_parameter_gates_are_identity() {
        let mut s = FockState::vacuum(2, 8).unwrap();
        s.displace(0, 0.5, 0.2).unwrap();
        s.squeeze(1, 0.2, 0.0).unwrap();
        s.apply_loss(0, 0.9).unwrap();
        let before = s.clone();
        s.kerr(0, 0.0).unwrap();
        s.phase_shift(1, 0.0).unwrap();
        s.beamsplitter(0, 1, 0.0, 0.4).unwrap();
        s.apply_additive_noise(0, 0.0, 0.0, 0.0).unwrap();
        for i in 0..s.dim() {
            for j in 0..s.dim() {
                assert!((s.element(i, j) - before.element(i, j)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn loss_extremes() {
        let mut one = FockState::number_state(6, &[1]).unwrap();
        one.apply_loss(0, 0.0).unwrap();
        assert!((one.element(0, 0).re - 1.0).abs() < 1e-15);
        let mut s = FockState::number_state(6, &[3]).unwrap();
        s.apply_loss(0, 1.0).unwrap();
        assert!((s.element(3, 3).re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn trace_hermiticity_and_positivity_preserved() {
        let mut s = FockState::vacuum(2, 16).unwrap();
        s.displace(0, 1.0, -0.5).unwrap();
        s.squeeze(1, 0.1, 0.2).unwrap();
        s.beamsplitter(0, 1, 0.7, 0.3).unwrap();
        s.kerr(0, 0.4).unwrap();
        s.apply_loss(1, 0.6).unwrap();
        s.apply_additive_noise(0, 0.2, 0.05, 0.1).unwrap();
        assert!(s.health().healthy, "{:?}", s.health());
        assert!((s.trace() - 1.0).abs() < 1e-8);
        assert!(s.hermiticity_residual() < 1e-10);
        assert!(s.min_eigenvalue() > -1e-9);
    }

    #[test]
    fn rank_one_noise_adds_to_covariance() {
        for (yxx, yxp, ypp) in [(0.3, 0.0, 0.0), (0.0, 0.0, 0.4), (0.2, 0.1, 0.05), (0.3, -0.2, 0.5)] {
            let mut s = FockState::vacuum(1, 30).unwrap();
            s.displace(0, 0.4, -0.3).unwrap();
            s.apply_additive_noise(0, yxx, yxp, ypp).unwrap();
            let (mean, cov) = s.moments();
            assert!((mean[0] - 0.4).abs() < 1e-10 && (mean[1] + 0.3).abs() < 1e-10);
            let expect = DMatrix::from_row_slice(2, 2, &[1.0 + yxx, yxp, yxp, 1.0 + ypp]);
            assert!((cov - expect).amax() < 1e-9, "{yxx} {yxp} {ypp}");
        }
    }

    #[test]
    fn absorption_branch_of_coherent_state() {
        let mut s = FockState::vacuum(1, 25).unwrap();
        s.displace(0, 2.0, 0.0).unwrap();
        let (p0, _) = s.no_absorption(&[0]).unwrap();
        let (p1, _) = s.absorption(&[0]).unwrap();
        assert!((p0 - (-1f64).exp()).abs() < 1e-10);
        assert!((p1 - (1.0 - (-1f64).exp())).abs() < 1e-10);
        let dist = FockState::vacuum(1, 5).unwrap().photon_number_distribution(0).unwrap();
        assert_eq!(dist[0], 1.0);
    }

    #[test]
    fn pure_and_mixed_projections_agree() {
        let mut s = FockState::vacuum(2, 12).unwrap();
        s.two_mode_squeeze(0, 1, 0.3).unwrap();
        s.displace(1, 0.3, 0.1).unwrap();
        let m = s.mixed().unwrap();
        let (d1, a) = s.condition_homodyne(0, 0.3, 1.0, 0.7).unwrap();
        let (d2, b) = m.condition_homodyne(0, 0.3, 1.0, 0.7).unwrap();
        assert!((d1 - d2).abs() < 1e-13);
        let diff = a.density_matrix() - b.density_matrix();
        assert!(diff.iter().all(|v| v.norm() < 1e-13));
    }

    #[test]
    fn vacuum_homodyne_density() {
        let s = FockState::vacuum(1, 10).unwrap();
        let d = s.homodyne_density_grid(0, 0.3, 1.0, &[-1.0, 0.0, 1.0]).unwrap();
        assert!((d[1] - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-12);
        assert!(s.homodyne_density_grid(0, 0.0, 1.0, &[0.0, 1.0]).is_err());
        assert!(s.homodyne_density_grid(0, 0.0, 1.0, &[0.0, 1.0, 9.0]).is_err());
    }
}
