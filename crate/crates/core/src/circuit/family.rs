//! Bounded random Gaussian circuits, used for oracle cross-checks and
//! property tests.

use std::f64::consts::PI;

use rand::Rng;

use super::ir::{Affine, CircuitIR, Node, Operation};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyBounds {
    /// Squeezing parameters are drawn from `[-max_squeeze, max_squeeze]`.
    pub max_squeeze: f64,
    /// Displacements `(dx, dp)` are drawn uniformly from the disc of this
    /// radius.
    pub max_displacement: f64,
    pub eta: (f64, f64),
    pub gain: (f64, f64),
    /// Additive noise is `A Aᵀ` with entries of `A` in `[-s, s]`.
    pub noise_scale: f64,
    /// Include loss, amplifier and noise channels.
    pub channels: bool,
}

impl Default for FamilyBounds {
    fn default() -> Self {
        Self {
            max_squeeze: 0.5,
            max_displacement: 2.0,
            eta: (0.5, 1.0),
            gain: (1.0, 1.5),
            noise_scale: 0.5,
            channels: true,
        }
    }
}

/// One random Gaussian gate or channel on `n_modes` modes.
pub fn random_operation(rng: &mut impl Rng, n_modes: usize, b: &FamilyBounds) -> Operation {
    let c = Affine::constant;
    let mut kinds = vec![0, 1, 2];
    if n_modes > 1 {
        kinds.extend([3, 4]);
    }
    if b.channels {
        kinds.extend([5, 6, 7]);
    }
    let m = rng.random_range(0..n_modes);
    let other = |rng: &mut dyn rand::RngCore| {
        let k = rng.random_range(1..n_modes);
        (m + k) % n_modes
    };
    let angle = |rng: &mut dyn rand::RngCore| rng.random_range(-PI..PI);
    match kinds[rng.random_range(0..kinds.len())] {
        0 => Operation::PhaseShift { mode: m, theta: c(angle(rng)) },
        1 => Operation::Squeeze {
            mode: m,
            r: c(rng.random_range(-b.max_squeeze..=b.max_squeeze)),
            phi: c(angle(rng)),
        },
        2 => {
            let radius = b.max_displacement * rng.random::<f64>().sqrt();
            let t = angle(rng);
            Operation::Displace { mode: m, dx: c(radius * t.cos()), dp: c(radius * t.sin()) }
        }
        3 => Operation::Beamsplitter { m1: m, m2: other(rng), theta: c(angle(rng)), phi: c(angle(rng)) },
        4 => Operation::TwoModeSqueeze {
            m1: m,
            m2: other(rng),
            r: c(rng.random_range(-b.max_squeeze..=b.max_squeeze)),
        },
        5 => Operation::Loss { mode: m, eta: c(rng.random_range(b.eta.0..=b.eta.1)) },
        6 => Operation::Amplifier { mode: m, gain: c(rng.random_range(b.gain.0..=b.gain.1)) },
        _ => {
            let s = b.noise_scale;
            let a: [f64; 4] = std::array::from_fn(|_| rng.random_range(-s..=s));
            Operation::Noise {
                mode: m,
                yxx: c(a[0] * a[0] + a[1] * a[1]),
                yxp: c(a[0] * a[2] + a[1] * a[3]),
                ypp: c(a[2] * a[2] + a[3] * a[3]),
            }
        }
    }
}

/// A vacuum-input circuit of `n_ops` random operations.
pub fn random_circuit(rng: &mut impl Rng, n_modes: usize, n_ops: usize, b: &FamilyBounds) -> CircuitIR {
    let mut ir = CircuitIR::new(n_modes);
    for _ in 0..n_ops {
        let op = random_operation(rng, n_modes, b);
        ir.push(Node::Op(op)).expect("generated operations are valid");
    }
    ir
}
