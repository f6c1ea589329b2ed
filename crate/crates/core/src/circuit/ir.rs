//! Typed circuit representation shared by the parser, printer, classifier
//! and executors.
//!
//! Mode indices are circuit-level: they name modes of the original circuit
//! even after earlier measurements have removed other modes from the state.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Which part of a recorded outcome an expression refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Component {
    /// The scalar outcome of a homodyne or photon-count measurement.
    Whole,
    /// `label.x` of a heterodyne outcome.
    X,
    /// `label.p` of a heterodyne outcome.
    P,
}

impl Component {
    pub fn index(self) -> usize {
        match self {
            Self::Whole | Self::X => 0,
            Self::P => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OutcomeRef {
    pub label: String,
    pub component: Component,
}

/// `constant + Σ coefficient · outcome`.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    pub constant: f64,
    pub terms: Vec<(OutcomeRef, f64)>,
}

impl Affine {
    pub fn constant(value: f64) -> Self {
        Self {
            constant: value,
            terms: Vec::new(),
        }
    }

    pub fn outcome(r: OutcomeRef) -> Self {
        Self {
            constant: 0.0,
            terms: vec![(r, 1.0)],
        }
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn as_constant(&self) -> Option<f64> {
        self.is_constant().then_some(self.constant)
    }

    pub fn add(mut self, other: Self) -> Self {
        self.constant += other.constant;
        for (r, c) in other.terms {
            match self.terms.iter_mut().find(|(s, _)| *s == r) {
                Some((_, existing)) => *existing += c,
                None => self.terms.push((r, c)),
            }
        }
        self
    }

    pub fn scale(mut self, factor: f64) -> Self {
        self.constant *= factor;
        for (_, c) in &mut self.terms {
            *c *= factor;
        }
        self
    }

    /// Evaluates against recorded outcome vectors.
    pub fn eval(&self, outcomes: &HashMap<String, Vec<f64>>) -> Result<f64> {
        let mut v = self.constant;
        for (r, c) in &self.terms {
            let values = outcomes.get(&r.label).ok_or_else(|| {
                Error::InvalidArgument(format!("outcome {} has not been recorded", r.label))
            })?;
            let x = values.get(r.component.index()).ok_or_else(|| {
                Error::InvalidArgument(format!("outcome {} has no such component", r.label))
            })?;
            v += c * x;
        }
        Ok(v)
    }
}

impl From<f64> for Affine {
    fn from(v: f64) -> Self {
        Self::constant(v)
    }
}

/// Gaussian gates and channels. Parameters may depend affinely on earlier
/// outcomes.
#[derive(Debug, Clone, PartialEq)]
pub enum Operation {
    PhaseShift { mode: usize, theta: Affine },
    Beamsplitter { m1: usize, m2: usize, theta: Affine, phi: Affine },
    Squeeze { mode: usize, r: Affine, phi: Affine },
    TwoModeSqueeze { m1: usize, m2: usize, r: Affine },
    Displace { mode: usize, dx: Affine, dp: Affine },
    Loss { mode: usize, eta: Affine },
    Amplifier { mode: usize, gain: Affine },
    Noise { mode: usize, yxx: Affine, yxp: Affine, ypp: Affine },
}

impl Operation {
    pub fn keyword(&self) -> &'static str {
        match self {
            Self::PhaseShift { .. } => "ps",
            Self::Beamsplitter { .. } => "bs",
            Self::Squeeze { .. } => "sq",
            Self::TwoModeSqueeze { .. } => "tms",
            Self::Displace { .. } => "disp",
            Self::Loss { .. } => "loss",
            Self::Amplifier { .. } => "amp",
            Self::Noise { .. } => "noise",
        }
    }

    pub fn modes(&self) -> Vec<usize> {
        match self {
            Self::Beamsplitter { m1, m2, .. } | Self::TwoModeSqueeze { m1, m2, .. } => vec![*m1, *m2],
            Self::PhaseShift { mode, .. }
            | Self::Squeeze { mode, .. }
            | Self::Displace { mode, .. }
            | Self::Loss { mode, .. }
            | Self::Amplifier { mode, .. }
            | Self::Noise { mode, .. } => vec![*mode],
        }
    }

    /// Parameters as `(key, value)` pairs in their canonical order.
    pub fn params(&self) -> Vec<(&'static str, &Affine)> {
        match self {
            Self::PhaseShift { theta, .. } => vec![("theta", theta)],
            Self::Beamsplitter { theta, phi, .. } => vec![("theta", theta), ("phi", phi)],
            Self::Squeeze { r, phi, .. } => vec![("r", r), ("phi", phi)],
            Self::TwoModeSqueeze { r, .. } => vec![("r", r)],
            Self::Displace { dx, dp, .. } => vec![("dx", dx), ("dp", dp)],
            Self::Loss { eta, .. } => vec![("eta", eta)],
            Self::Amplifier { gain, .. } => vec![("gain", gain)],
            Self::Noise { yxx, yxp, ypp, .. } => vec![("yxx", yxx), ("yxp", yxp), ("ypp", ypp)],
        }
    }

    pub fn is_channel(&self) -> bool {
        matches!(self, Self::Loss { .. } | Self::Amplifier { .. } | Self::Noise { .. })
    }

    pub fn is_squeezing(&self) -> bool {
        matches!(self, Self::Squeeze { .. } | Self::TwoModeSqueeze { .. })
    }

    pub fn depends_on_outcomes(&self) -> bool {
        self.params().iter().any(|(_, a)| !a.is_constant())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Measurement {
    Homodyne { mode: usize, angle: f64, efficiency: f64 },
    Heterodyne { mode: usize },
    VacuumProjection { modes: Vec<usize> },
    PhotonCount { mode: usize },
}

impl Measurement {
    pub fn keyword(&self) -> &'static str {
        match self {
            Self::Homodyne { .. } => "homodyne",
            Self::Heterodyne { .. } => "heterodyne",
            Self::VacuumProjection { .. } => "vacproj",
            Self::PhotonCount { .. } => "photoncount",
        }
    }

    pub fn modes(&self) -> Vec<usize> {
        match self {
            Self::Homodyne { mode, .. } | Self::Heterodyne { mode } | Self::PhotonCount { mode } => {
                vec![*mode]
            }
            Self::VacuumProjection { modes } => modes.clone(),
        }
    }

    /// Length of the numeric outcome vector (0 for vacuum projection).
    pub fn outcome_len(&self) -> usize {
        match self {
            Self::Homodyne { .. } | Self::PhotonCount { .. } => 1,
            Self::Heterodyne { .. } => 2,
            Self::VacuumProjection { .. } => 0,
        }
    }

    pub fn is_gaussian(&self) -> bool {
        !matches!(self, Self::PhotonCount { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    /// A gate or channel with constant parameters.
    Op(Operation),
    /// A gate or channel whose parameters depend on earlier outcomes.
    Feedforward(Operation),
    Measure { label: String, measurement: Measurement },
    Kerr { mode: usize, chi: f64 },
}

impl Node {
    pub fn modes(&self) -> Vec<usize> {
        match self {
            Self::Op(op) | Self::Feedforward(op) => op.modes(),
            Self::Measure { measurement, .. } => measurement.modes(),
            Self::Kerr { mode, .. } => vec![*mode],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialState {
    Vacuum,
    Coherent { dx: f64, dp: f64 },
    Squeezed { r: f64, phi: f64 },
    Fock(usize),
}

/// A parsed circuit. Equality ignores source line numbers.
#[derive(Debug, Clone)]
pub struct CircuitIR {
    pub n_modes: usize,
    pub initial: Vec<InitialState>,
    pub nodes: Vec<Node>,
    /// Source line of each node, for diagnostics; 0 when built in code.
    pub lines: Vec<usize>,
}

impl PartialEq for CircuitIR {
    fn eq(&self, other: &Self) -> bool {
        self.n_modes == other.n_modes && self.initial == other.initial && self.nodes == other.nodes
    }
}

impl CircuitIR {
    /// An all-vacuum circuit with no nodes.
    pub fn new(n_modes: usize) -> Self {
        Self {
            n_modes,
            initial: vec![InitialState::Vacuum; n_modes],
            nodes: Vec::new(),
            lines: Vec::new(),
        }
    }

    /// Appends a node, checking it against the invariants of the circuit.
    pub fn push(&mut self, node: Node) -> Result<()> {
        self.check_node(&node, 0)?;
        self.nodes.push(node);
        self.lines.push(0);
        Ok(())
    }

    pub fn line_of(&self, node: usize) -> usize {
        self.lines.get(node).copied().unwrap_or(0)
    }

    pub fn labels(&self) -> impl Iterator<Item = (&str, &Measurement)> {
        self.nodes.iter().filter_map(|n| match n {
            Node::Measure { label, measurement } => Some((label.as_str(), measurement)),
            _ => None,
        })
    }

    pub fn measurement(&self, label: &str) -> Option<&Measurement> {
        self.labels().find(|(l, _)| *l == label).map(|(_, m)| m)
    }

    /// Modes that have not been measured by any node.
    pub fn surviving_modes(&self) -> Vec<usize> {
        let measured: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                Node::Measure { measurement, .. } => Some(measurement.modes()),
                _ => None,
            })
            .flatten()
            .collect();
        (0..self.n_modes).filter(|m| !measured.contains(m)).collect()
    }

    /// Checks `node` as if appended now: modes in range, distinct and not
    /// yet measured; labels unique; outcome references to earlier labels
    /// with the right shape.
    pub(crate) fn check_node(&self, node: &Node, line: usize) -> Result<()> {
        let err = |message: String| Error::Semantic { line, message };
        let modes = node.modes();
        if modes.is_empty() {
            return Err(err("node acts on no modes".into()));
        }
        let measured: Vec<usize> = self.labels().flat_map(|(_, m)| m.modes()).collect();
        for (i, &m) in modes.iter().enumerate() {
            if m >= self.n_modes {
                return Err(err(format!("unknown mode {m}: the circuit has {} modes", self.n_modes)));
            }
            if modes[..i].contains(&m) {
                return Err(err(format!("mode {m} listed twice")));
            }
            if measured.contains(&m) {
                return Err(err(format!("mode {m} was already measured")));
            }
        }
        match node {
            Node::Measure { label, .. } => {
                if self.measurement(label).is_some() {
                    return Err(err(format!("duplicate label {label}")));
                }
            }
            Node::Op(op) | Node::Feedforward(op) => {
                for (_, a) in op.params() {
                    for (r, _) in &a.terms {
                        let m = self
                            .measurement(&r.label)
                            .ok_or_else(|| err(format!("reference to unknown or later label {}", r.label)))?;
                        let ok = match (m, r.component) {
                            (Measurement::Heterodyne { .. }, Component::X | Component::P) => true,
                            (Measurement::Homodyne { .. } | Measurement::PhotonCount { .. }, Component::Whole) => {
                                true
                            }
                            _ => false,
                        };
                        if !ok {
                            let hint = match m {
                                Measurement::Heterodyne { .. } => "use label.x or label.p",
                                Measurement::VacuumProjection { .. } => "vacuum projection has no numeric outcome",
                                _ => "scalar outcomes take no component",
                            };
                            return Err(err(format!("bad reference to {}: {hint}", r.label)));
                        }
                    }
                }
            }
            Node::Kerr { .. } => {}
        }
        Ok(())
    }
}
