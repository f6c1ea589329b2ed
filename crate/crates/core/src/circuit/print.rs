//! Canonical source form of a circuit. Floats use the shortest text that
//! parses back to the same value, so `parse(print(ir)) == ir`.

use std::fmt::Write;

use super::ir::{Affine, CircuitIR, Component, InitialState, Measurement, Node};

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn affine(a: &Affine) -> String {
    let mut s = num(a.constant);
    for (r, c) in &a.terms {
        let sign = if c.is_sign_negative() { '-' } else { '+' };
        let suffix = match r.component {
            Component::Whole => "",
            Component::X => ".x",
            Component::P => ".p",
        };
        let _ = write!(s, "{sign}{}*{}{suffix}", num(c.abs()), r.label);
    }
    s
}

pub fn print(ir: &CircuitIR) -> String {
    let mut out = format!("modes {}\n", ir.n_modes);
    for (mode, init) in ir.initial.iter().enumerate() {
        let _ = match *init {
            InitialState::Vacuum => Ok(()),
            InitialState::Coherent { dx, dp } => writeln!(out, "init {mode} coherent {} {}", num(dx), num(dp)),
            InitialState::Squeezed { r, phi } => writeln!(out, "init {mode} squeezed {} {}", num(r), num(phi)),
            InitialState::Fock(n) => writeln!(out, "init {mode} fock {n}"),
        };
    }
    for node in &ir.nodes {
        match node {
            Node::Op(op) | Node::Feedforward(op) => {
                out.push_str(op.keyword());
                for m in op.modes() {
                    let _ = write!(out, " {m}");
                }
                for (key, value) in op.params() {
                    let _ = write!(out, " {key}={}", affine(value));
                }
            }
            Node::Kerr { mode, chi } => {
                let _ = write!(out, "kerr {mode} chi={}", num(*chi));
            }
            Node::Measure { label, measurement } => {
                let _ = write!(out, "{label} = {}", measurement.keyword());
                for m in measurement.modes() {
                    let _ = write!(out, " {m}");
                }
                if let Measurement::Homodyne { angle, efficiency, .. } = measurement {
                    let _ = write!(out, " angle={} eff={}", num(*angle), num(*efficiency));
                }
            }
        }
        out.push('\n');
    }
    out
}
