//! Static simulatability classification.
//!
//! Decision table, in order of precedence:
//!
//! | resources present                          | verdict                      | row |
//! |--------------------------------------------|------------------------------|-----|
//! | only Gaussian inputs, CP maps, dyne/vacproj | `Simulatable`                | 1   |
//! | Kerr                                       | `NotEfficientlySimulatable`  | 2   |
//! | photon counting with number-state inputs   | `NotEfficientlySimulatable`  | 3   |
//! | photon counting with squeezing             | `NotEfficientlySimulatable`  | 4   |
//! | number-state inputs, no counting or Kerr    | `Unknown`                    | 5   |
//! | photon counting on passive optics only     | `Unknown`                    | -   |
//!
//! `fock 0` is the vacuum and is treated as Gaussian.

use std::fmt;

use super::ir::{CircuitIR, InitialState, Measurement, Node, Operation};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Simulatable,
    NotEfficientlySimulatable,
    Unknown,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Self::Simulatable => "SIMULATABLE",
            Self::NotEfficientlySimulatable => "NOT_EFFICIENTLY_SIMULATABLE",
            Self::Unknown => "UNKNOWN",
        }
    }
}

/// Where a non-Gaussian element sits in the circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Site {
    /// The initial state of a mode.
    Input { mode: usize },
    /// Node `index` (0-based), written on source line `line`.
    Node { index: usize, line: usize },
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Site::Input { mode } => write!(f, "init of mode {mode}"),
            Site::Node { index, line: 0 } => write!(f, "node {index}"),
            Site::Node { index, line } => write!(f, "node {index} (line {line})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WitnessKind {
    Kerr,
    FockInput,
    PhotonCount,
    /// Feedforward conditioned on a photon-count outcome.
    NonGaussianFeedforward,
}

impl WitnessKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Kerr => "kerr",
            Self::FockInput => "fock_input",
            Self::PhotonCount => "photon_count",
            Self::NonGaussianFeedforward => "non_gaussian_feedforward",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub site: Site,
    pub kind: WitnessKind,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimulatabilityReport {
    pub verdict: Verdict,
    pub witnesses: Vec<Witness>,
    /// Row of the resource table (1 to 5) the circuit falls under, if any.
    pub matched_row: Option<u8>,
}

impl SimulatabilityReport {
    pub fn first_witness(&self) -> Option<&Witness> {
        self.witnesses.first()
    }
}

impl fmt::Display for SimulatabilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "verdict: {}", self.verdict.name())?;
        match self.matched_row {
            Some(row) => writeln!(f, "matched row: {row}")?,
            None => writeln!(f, "matched row: none")?,
        }
        if self.witnesses.is_empty() {
            write!(f, "witnesses: none")
        } else {
            write!(f, "witnesses:")?;
            for w in &self.witnesses {
                write!(f, "\n  {}: {} ({})", w.site, w.kind.name(), w.reason)?;
            }
            Ok(())
        }
    }
}

/// Classifies a circuit without executing it.
pub fn classify(ir: &CircuitIR) -> SimulatabilityReport {
    let mut witnesses = Vec::new();
    let mut squeezing = false;
    for (mode, init) in ir.initial.iter().enumerate() {
        match *init {
            InitialState::Fock(n) if n > 0 => witnesses.push(Witness {
                site: Site::Input { mode },
                kind: WitnessKind::FockInput,
                reason: format!("number state |{n}> is not Gaussian"),
            }),
            InitialState::Squeezed { r, .. } if r != 0.0 => squeezing = true,
            _ => {}
        }
    }
    let counted: Vec<&str> = ir
        .labels()
        .filter(|(_, m)| matches!(m, Measurement::PhotonCount { .. }))
        .map(|(l, _)| l)
        .collect();
    for (index, node) in ir.nodes.iter().enumerate() {
        let site = Site::Node { index, line: ir.line_of(index) };
        match node {
            Node::Kerr { .. } => witnesses.push(Witness {
                site,
                kind: WitnessKind::Kerr,
                reason: "Kerr interaction is not a Gaussian CP map".into(),
            }),
            Node::Measure { label, measurement: Measurement::PhotonCount { .. } } => witnesses.push(Witness {
                site,
                kind: WitnessKind::PhotonCount,
                reason: format!("photon counting `{label}` is not a Gaussian measurement"),
            }),
            Node::Measure { .. } => {}
            Node::Op(op) | Node::Feedforward(op) => {
                squeezing |= op.is_squeezing() && !is_trivial_squeeze(op);
                let on_counts: Vec<&str> = op
                    .params()
                    .into_iter()
                    .flat_map(|(_, a)| a.terms.iter().map(|(r, _)| r.label.as_str()))
                    .filter(|l| counted.contains(l))
                    .collect();
                if let Some(label) = on_counts.first() {
                    witnesses.push(Witness {
                        site,
                        kind: WitnessKind::NonGaussianFeedforward,
                        reason: format!("feedforward on photon-count outcome `{label}`"),
                    });
                }
            }
        }
    }
    let has = |k: WitnessKind| witnesses.iter().any(|w| w.kind == k);
    let (verdict, matched_row) = if witnesses.is_empty() {
        (Verdict::Simulatable, Some(1))
    } else if has(WitnessKind::Kerr) {
        (Verdict::NotEfficientlySimulatable, Some(2))
    } else if has(WitnessKind::PhotonCount) && has(WitnessKind::FockInput) {
        (Verdict::NotEfficientlySimulatable, Some(3))
    } else if has(WitnessKind::PhotonCount) && squeezing {
        (Verdict::NotEfficientlySimulatable, Some(4))
    } else if has(WitnessKind::FockInput) {
        (Verdict::Unknown, Some(5))
    } else {
        (Verdict::Unknown, None)
    };
    SimulatabilityReport {
        verdict,
        witnesses,
        matched_row,
    }
}

fn is_trivial_squeeze(op: &Operation) -> bool {
    match op {
        Operation::Squeeze { r, .. } | Operation::TwoModeSqueeze { r, .. } => r.as_constant() == Some(0.0),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse::parse;
    use super::*;

    fn verdict(text: &str) -> (Verdict, Option<u8>) {
        let r = classify(&parse(text).unwrap());
        (r.verdict, r.matched_row)
    }

    #[test]
    fn gaussian_circuit_with_feedforward() {
        let r = classify(&parse("modes 2\nsq 0 r=0.5 phi=0\nbs 0 1 theta=0.7 phi=0\nm = homodyne 0 angle=0\ndisp 1 dx=m dp=0").unwrap());
        assert_eq!(r.verdict, Verdict::Simulatable);
        assert!(r.witnesses.is_empty());
        assert_eq!(r.matched_row, Some(1));
    }

    #[test]
    fn kerr_witness_names_the_node() {
        let r = classify(&parse("modes 1\nsq 0 r=0.5 phi=0\nkerr 0 chi=0.1\nm = homodyne 0 angle=0").unwrap());
        assert_eq!(r.verdict, Verdict::NotEfficientlySimulatable);
        assert_eq!(r.witnesses.len(), 1);
        assert_eq!(r.witnesses[0].site, Site::Node { index: 1, line: 3 });
        assert_eq!(r.witnesses[0].kind, WitnessKind::Kerr);
    }

    #[test]
    fn decision_table() {
        assert_eq!(
            verdict("modes 2\ninit 0 fock 1\nbs 0 1 theta=0.7 phi=0\nn = photoncount 1"),
            (Verdict::NotEfficientlySimulatable, Some(3))
        );
        assert_eq!(
            verdict("modes 1\nsq 0 r=0.5 phi=0\nn = photoncount 0"),
            (Verdict::NotEfficientlySimulatable, Some(4))
        );
        assert_eq!(
            verdict("modes 1\ninit 0 squeezed 0.5 0\nn = photoncount 0"),
            (Verdict::NotEfficientlySimulatable, Some(4))
        );
        assert_eq!(
            verdict("modes 2\ninit 0 fock 1\nsq 1 r=0.5 phi=0\nm = homodyne 0 angle=0"),
            (Verdict::Unknown, Some(5))
        );
        assert_eq!(verdict("modes 1\ndisp 0 dx=1 dp=0\nn = photoncount 0"), (Verdict::Unknown, None));
        assert_eq!(verdict("modes 1\ninit 0 fock 0\nm = homodyne 0 angle=0"), (Verdict::Simulatable, Some(1)));
    }

    #[test]
    fn feedforward_on_counts_is_a_witness() {
        let r = classify(&parse("modes 2\nn = photoncount 0\ndisp 1 dx=n dp=0").unwrap());
        let kinds: Vec<_> = r.witnesses.iter().map(|w| w.kind).collect();
        assert_eq!(kinds, vec![WitnessKind::PhotonCount, WitnessKind::NonGaussianFeedforward]);
    }
}
