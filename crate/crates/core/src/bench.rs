//! Scaling benchmark: wall time of [`execute`] on random local circuits.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::ir::{Affine, CircuitIR, Node, Operation};
use crate::circuit::{execute, ExecOptions};
use crate::error::{Error, Result};

pub const DEFAULT_SIZES: [usize; 5] = [64, 128, 256, 512, 1024];
pub const GATES_PER_MODE: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchPoint {
    pub n_modes: usize,
    pub gates: usize,
    /// Fastest of the repeats.
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub points: Vec<BenchPoint>,
    /// Least-squares slope of log(time) against log(modes).
    pub slope: f64,
}

/// `n_gates` gates drawn uniformly from phase shifts, squeezers,
/// displacements, and beamsplitters or two-mode squeezers on neighbouring
/// modes.
pub fn random_local_circuit(n_modes: usize, n_gates: usize, rng: &mut impl Rng) -> CircuitIR {
    let mut ir = CircuitIR::new(n_modes);
    let c = |v: f64| Affine::constant(v);
    for _ in 0..n_gates {
        let m = rng.random_range(0..n_modes);
        let kind = if n_modes > 1 { rng.random_range(0..5) } else { rng.random_range(0..3) };
        let op = match kind {
            0 => Operation::PhaseShift { mode: m, theta: c(rng.random_range(-3.0..3.0)) },
            1 => Operation::Squeeze { mode: m, r: c(rng.random_range(-0.3..0.3)), phi: c(rng.random_range(-3.0..3.0)) },
            2 => Operation::Displace { mode: m, dx: c(rng.random_range(-1.0..1.0)), dp: c(rng.random_range(-1.0..1.0)) },
            3 => Operation::Beamsplitter {
                m1: m,
                m2: (m + 1) % n_modes,
                theta: c(rng.random_range(-3.0..3.0)),
                phi: c(rng.random_range(-3.0..3.0)),
            },
            _ => Operation::TwoModeSqueeze { m1: m, m2: (m + 1) % n_modes, r: c(rng.random_range(-0.3..0.3)) },
        };
        ir.push(Node::Op(op)).expect("generated gates are valid");
    }
    ir
}

pub fn loglog_slope(points: &[BenchPoint]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|p| (p.n_modes as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.seconds.max(1e-9).ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Times `execute` at each size, keeping the fastest of `repeats` runs.
pub fn run(sizes: &[usize], repeats: usize, seed: u64) -> Result<BenchReport> {
    if sizes.len() < 2 || sizes.contains(&0) {
        return Err(Error::InvalidArgument("bench needs at least two positive sizes".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let gates = GATES_PER_MODE * n;
        let ir = random_local_circuit(n, gates, &mut rng);
        let mut best = f64::INFINITY;
        for _ in 0..repeats.max(1) {
            let start = Instant::now();
            execute(&ir, seed, &ExecOptions::default())?;
            best = best.min(start.elapsed().as_secs_f64());
        }
        points.push(BenchPoint { n_modes: n, gates, seconds: best });
    }
    let slope = loglog_slope(&points);
    Ok(BenchReport { points, slope })
}
