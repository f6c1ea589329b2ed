//! Ladder operators, gate generators and their exponentials on a
//! truncated number basis.

use std::collections::{BTreeMap, HashMap};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Extra levels used while exponentiating a generator; the result is then
/// restricted to the working cutoff.
pub const EXPM_PADDING: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    Lower,
    Raise,
    Number,
}

/// `coef · L₁ L₂ … L_k`, each factor acting on a local mode.
#[derive(Debug, Clone)]
pub struct Term {
    pub coef: Complex64,
    pub ops: Vec<(usize, Ladder)>,
}

impl Term {
    pub fn new(coef: Complex64, ops: &[(usize, Ladder)]) -> Self {
        Self {
            coef,
            ops: ops.to_vec(),
        }
    }
}

/// Applies `op` to the number state with occupations `digits` in place.
/// Returns the matrix element, or `None` when the result leaves the
/// truncated space or vanishes.
pub fn apply_ladder(op: Ladder, mode: usize, digits: &mut [usize], cutoff: usize) -> Option<f64> {
    let n = digits[mode];
    match op {
        Ladder::Lower => {
            if n == 0 {
                return None;
            }
            digits[mode] = n - 1;
            Some((n as f64).sqrt())
        }
        Ladder::Raise => {
            if n + 1 >= cutoff {
                return None;
            }
            digits[mode] = n + 1;
            Some(((n + 1) as f64).sqrt())
        }
        Ladder::Number => (n > 0).then_some(n as f64),
    }
}

pub fn to_digits(mut index: usize, n_modes: usize, cutoff: usize, out: &mut [usize]) {
    for j in (0..n_modes).rev() {
        out[j] = index % cutoff;
        index /= cutoff;
    }
}

pub fn from_digits(digits: &[usize], cutoff: usize) -> usize {
    digits.iter().fold(0, |acc, &d| acc * cutoff + d)
}

/// Sparse operator on `k` local modes with per-mode dimension `cutoff`,
/// stored as `(row, col, value)` triples.
#[derive(Debug, Clone)]
pub struct LocalOp {
    pub n_local: usize,
    pub cutoff: usize,
    pub entries: Vec<(usize, usize, Complex64)>,
}

impl LocalOp {
    pub fn dim(&self) -> usize {
        self.cutoff.pow(self.n_local as u32)
    }

    /// Sum of `terms` as a sparse matrix.
    pub fn from_terms(terms: &[Term], n_local: usize, cutoff: usize) -> Self {
        let dim = cutoff.pow(n_local as u32);
        let mut acc: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
        let mut digits = vec![0; n_local];
        for col in 0..dim {
            for term in terms {
                to_digits(col, n_local, cutoff, &mut digits);
                let mut coef = term.coef;
                let mut alive = true;
                for &(mode, op) in term.ops.iter().rev() {
                    match apply_ladder(op, mode, &mut digits, cutoff) {
                        Some(v) => coef *= v,
                        None => {
                            alive = false;
                            break;
                        }
                    }
                }
                if alive {
                    *acc.entry((from_digits(&digits, cutoff), col)).or_default() += coef;
                }
            }
        }
        Self {
            n_local,
            cutoff,
            entries: acc
                .into_iter()
                .filter(|(_, v)| v.norm() > 0.0)
                .map(|((r, c), v)| (r, c, v))
                .collect(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let dim = self.dim();
        let mut m = DMatrix::zeros(dim, dim);
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v;
        }
        m
    }

    /// Restricts an operator built with a larger per-mode dimension to the
    /// first `cutoff` levels of every mode.
    fn restrict(&self, cutoff: usize) -> Self {
        let mut digits = vec![0; self.n_local];
        let mut map = |i: usize| {
            to_digits(i, self.n_local, self.cutoff, &mut digits);
            digits
                .iter()
                .all(|&d| d < cutoff)
                .then(|| from_digits(&digits, cutoff))
        };
        let entries = self
            .entries
            .iter()
            .filter_map(|&(r, c, v)| Some((map(r)?, map(c)?, v)))
            .collect();
        Self {
            n_local: self.n_local,
            cutoff,
            entries,
        }
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// `exp(G)` for an anti-Hermitian generator given as ladder terms.
///
/// The generator is built with [`EXPM_PADDING`] extra levels per mode,
/// split into the connected blocks of its sparsity graph (conserved
/// quantities such as total photon number make these small), and each
/// block is exponentiated through the eigendecomposition of the Hermitian
/// matrix `iG`. The result is restricted to `cutoff` levels.
pub fn unitary(terms: &[Term], n_local: usize, cutoff: usize) -> Result<LocalOp> {
    let padded = cutoff + EXPM_PADDING;
    let gen = LocalOp::from_terms(terms, n_local, padded);
    let dim = gen.dim();
    let lookup: HashMap<(usize, usize), Complex64> =
        gen.entries.iter().map(|&(r, c, v)| ((r, c), v)).collect();
    for &(r, c, v) in &gen.entries {
        let partner = lookup.get(&(c, r)).copied().unwrap_or_default();
        if (v + partner.conj()).norm() > 1e-12 * v.norm().max(1.0) {
            return Err(Error::InvalidArgument("gate generator is not anti-Hermitian".into()));
        }
    }

    let mut parent: Vec<usize> = (0..dim).collect();
    for &(r, c, _) in &gen.entries {
        let (a, b) = (find(&mut parent, r), find(&mut parent, c));
        if a != b {
            parent[a] = b;
        }
    }
    let mut blocks: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..dim {
        let root = find(&mut parent, i);
        blocks.entry(root).or_default().push(i);
    }
    let mut position = vec![0usize; dim];
    let mut block_of = vec![0usize; dim];
    let block_list: Vec<Vec<usize>> = blocks.into_values().collect();
    for (b, members) in block_list.iter().enumerate() {
        for (p, &i) in members.iter().enumerate() {
            position[i] = p;
            block_of[i] = b;
        }
    }
    let mut dense: Vec<DMatrix<Complex64>> = block_list
        .iter()
        .map(|m| DMatrix::zeros(m.len(), m.len()))
        .collect();
    let i_unit = Complex64::new(0.0, 1.0);
    for &(r, c, v) in &gen.entries {
        dense[block_of[r]][(position[r], position[c])] += i_unit * v;
    }

    let mut entries = Vec::new();
    for (members, h) in block_list.iter().zip(dense) {
        let h = (&h + h.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = h.symmetric_eigen();
        let phases = eig.eigenvalues.map(|l| Complex64::from_polar(1.0, -l));
        let v = &eig.eigenvectors;
        let u = v * DMatrix::from_diagonal(&phases) * v.adjoint();
        for (a, &ra) in members.iter().enumerate() {
            for (b, &cb) in members.iter().enumerate() {
                let val = u[(a, b)];
                if val.norm() > 1e-300 {
                    entries.push((ra, cb, val));
                }
            }
        }
    }
    Ok(LocalOp {
        n_local,
        cutoff: padded,
        entries,
    }
    .restrict(cutoff))
}

/// Kraus operators of pure loss with transmissivity `eta`:
/// `K_k |n⟩ = √C(n,k) (1−η)^{k/2} η^{(n−k)/2} |n−k⟩`.
pub fn loss_kraus(eta: f64, cutoff: usize) -> Vec<LocalOp> {
    let lf = log_factorials(cutoff);
    (0..cutoff)
        .map(|k| {
            let entries = (k..cutoff)
                .filter_map(|n| {
                    let binom = (0.5 * (lf[n] - lf[k] - lf[n - k])).exp();
                    let v = binom * (1.0 - eta).powf(0.5 * k as f64) * eta.powf(0.5 * (n - k) as f64);
                    (v != 0.0).then(|| (n - k, n, Complex64::new(v, 0.0)))
                })
                .collect();
            LocalOp {
                n_local: 1,
                cutoff,
                entries,
            }
        })
        .filter(|op| !op.entries.is_empty())
        .collect()
}

/// Kraus operators of the quantum-limited amplifier with gain `gain`:
/// `B_k |n⟩ = √C(n+k,k) (1−1/G)^{k/2} G^{−(n+1)/2} |n+k⟩`.
pub fn amplifier_kraus(gain: f64, cutoff: usize) -> Vec<LocalOp> {
    let lf = log_factorials(2 * cutoff);
    (0..cutoff)
        .map(|k| {
            let entries = (0..cutoff.saturating_sub(k))
                .filter_map(|n| {
                    let binom = (0.5 * (lf[n + k] - lf[k] - lf[n])).exp();
                    let v = binom
                        * (1.0 - 1.0 / gain).powf(0.5 * k as f64)
                        * gain.powf(-0.5 * (n + 1) as f64);
                    (v != 0.0).then(|| (n + k, n, Complex64::new(v, 0.0)))
                })
                .collect();
            LocalOp {
                n_local: 1,
                cutoff,
                entries,
            }
        })
        .filter(|op| !op.entries.is_empty())
        .collect()
}

fn log_factorials(n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    for i in 1..=n {
        out[i] = out[i - 1] + (i as f64).ln();
    }
    out
}
