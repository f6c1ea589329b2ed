//! Line-oriented circuit parser.
//!
//! Each non-blank line holds one statement; `#` starts a comment. Numeric
//! gate and channel parameters are affine expressions over earlier
//! measurement outcomes (`0.5 + 1.2*m1`, `-h.x/2`); measurement settings,
//! `kerr` strengths and `init` arguments must be constant.

use std::collections::HashMap;

use super::ir::{Affine, CircuitIR, Component, InitialState, Measurement, Node, Operation, OutcomeRef};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    Sym(char),
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(v) => format!("number {v}"),
            Tok::Sym(c) => format!("`{c}`"),
            Tok::End => "end of line".into(),
        }
    }
}

struct Line {
    no: usize,
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

fn lex(no: usize, text: &str) -> Result<Line> {
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c == '#' {
            break;
        } else if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            toks.push((Tok::Ident(chars[start..i].iter().collect()), col));
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s: String = chars[start..i].iter().collect();
            let v = s.parse::<f64>().map_err(|_| Error::Syntax {
                line: no,
                column: col,
                message: format!("malformed number `{s}`"),
                expected: "a decimal number".into(),
            })?;
            toks.push((Tok::Number(v), col));
        } else if "=+-*/().".contains(c) {
            toks.push((Tok::Sym(c), col));
            i += 1;
        } else {
            return Err(Error::Syntax {
                line: no,
                column: col,
                message: format!("unexpected character `{c}`"),
                expected: "identifier, number or operator".into(),
            });
        }
    }
    let end = chars.len() + 1;
    toks.push((Tok::End, end));
    Ok(Line { no, toks, pos: 0 })
}

impl Line {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].0
    }

    fn column(&self) -> usize {
        self.toks[self.pos].1
    }

    fn next(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: impl Into<String>, expected: impl Into<String>) -> Error {
        Error::Syntax {
            line: self.no,
            column: self.column(),
            message: message.into(),
            expected: expected.into(),
        }
    }

    fn unexpected(&self, expected: &str) -> Error {
        self.error(format!("unexpected {}", self.peek().describe()), expected)
    }

    fn expect_sym(&mut self, c: char) -> Result<()> {
        if *self.peek() == Tok::Sym(c) {
            self.next();
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{c}`")))
        }
    }

    fn expect_end(&mut self) -> Result<()> {
        if *self.peek() == Tok::End {
            Ok(())
        } else {
            Err(self.unexpected("end of line"))
        }
    }

    fn ident(&mut self, expected: &str) -> Result<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.next();
                Ok(s)
            }
            _ => Err(self.unexpected(expected)),
        }
    }

    fn count(&mut self, expected: &str) -> Result<usize> {
        match *self.peek() {
            Tok::Number(v) if v >= 0.0 && v.fract() == 0.0 && v < 1e9 => {
                self.next();
                Ok(v as usize)
            }
            _ => Err(self.unexpected(expected)),
        }
    }

    /// A mode written as `3` or `q3`.
    fn mode(&mut self) -> Result<usize> {
        const EXPECTED: &str = "mode index (`3` or `q3`)";
        if let Tok::Ident(s) = self.peek() {
            if let Some(n) = s.strip_prefix('q').and_then(|d| d.parse::<usize>().ok()) {
                self.next();
                return Ok(n);
            }
            return Err(self.unexpected(EXPECTED));
        }
        self.count(EXPECTED)
    }

    fn at_mode(&self) -> bool {
        match self.peek() {
            Tok::Number(_) => true,
            Tok::Ident(s) => s.strip_prefix('q').is_some_and(|d| d.parse::<usize>().is_ok()),
            _ => false,
        }
    }

    /// A number with an optional sign. `init` arguments are separated by
    /// spaces only, so a full expression would swallow `1 -2` as `1 - 2`.
    fn signed_number(&mut self) -> Result<f64> {
        let sign = match self.peek() {
            Tok::Sym('-') => {
                self.next();
                -1.0
            }
            Tok::Sym('+') => {
                self.next();
                1.0
            }
            _ => 1.0,
        };
        match *self.peek() {
            Tok::Number(v) => {
                self.next();
                Ok(sign * v)
            }
            _ => Err(self.unexpected("number")),
        }
    }

    fn expr(&mut self) -> Result<Affine> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Tok::Sym('+') => {
                    self.next();
                    acc = acc.add(self.term()?);
                }
                Tok::Sym('-') => {
                    self.next();
                    acc = acc.add(self.term()?.scale(-1.0));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Affine> {
        let mut acc = self.unary()?;
        loop {
            let col = self.column();
            let op = match self.peek() {
                Tok::Sym(c @ ('*' | '/')) => *c,
                _ => return Ok(acc),
            };
            self.next();
            let rhs = self.unary()?;
            let non_affine = |what: &str| Error::Syntax {
                line: self.no,
                column: col,
                message: format!("non-affine feedforward: {what}"),
                expected: "an affine expression".into(),
            };
            acc = match op {
                '*' => match (acc.as_constant(), rhs.as_constant()) {
                    (Some(a), _) => rhs.scale(a),
                    (None, Some(b)) => acc.scale(b),
                    (None, None) => return Err(non_affine("product of measurement outcomes")),
                },
                _ => match rhs.as_constant() {
                    Some(b) => acc.scale(1.0 / b),
                    None => return Err(non_affine("division by a measurement outcome")),
                },
            };
        }
    }

    fn unary(&mut self) -> Result<Affine> {
        match self.peek() {
            Tok::Sym('-') => {
                self.next();
                Ok(self.unary()?.scale(-1.0))
            }
            Tok::Sym('+') => {
                self.next();
                self.unary()
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Affine> {
        const EXPECTED: &str = "number, `pi`, outcome label or `(`";
        match self.peek().clone() {
            Tok::Number(v) => {
                self.next();
                Ok(Affine::constant(v))
            }
            Tok::Sym('(') => {
                self.next();
                let e = self.expr()?;
                self.expect_sym(')')?;
                Ok(e)
            }
            Tok::Ident(name) if name == "pi" => {
                self.next();
                Ok(Affine::constant(std::f64::consts::PI))
            }
            Tok::Ident(label) => {
                self.next();
                let component = if *self.peek() == Tok::Sym('.') {
                    self.next();
                    match self.ident("`x` or `p`")?.as_str() {
                        "x" => Component::X,
                        "p" => Component::P,
                        other => {
                            self.pos -= 1;
                            return Err(self.error(format!("unknown component `{other}`"), "`x` or `p`"));
                        }
                    }
                } else {
                    Component::Whole
                };
                Ok(Affine::outcome(OutcomeRef { label, component }))
            }
            _ => Err(self.unexpected(EXPECTED)),
        }
    }

    /// Parses `key=expr` pairs up to the end of the line. Every key in
    /// `required` must appear; keys in `optional` may.
    fn params(&mut self, required: &[&str], optional: &[&str]) -> Result<HashMap<String, Affine>> {
        let mut out = HashMap::new();
        let expected = || {
            required
                .iter()
                .chain(optional)
                .map(|k| format!("`{k}=`"))
                .collect::<Vec<_>>()
                .join(", ")
        };
        while *self.peek() != Tok::End {
            let key = match self.peek().clone() {
                Tok::Ident(k) if required.contains(&k.as_str()) || optional.contains(&k.as_str()) => k,
                _ => return Err(self.unexpected(&expected())),
            };
            if out.contains_key(&key) {
                return Err(self.error(format!("parameter `{key}` given twice"), expected()));
            }
            self.next();
            self.expect_sym('=')?;
            out.insert(key, self.expr()?);
        }
        let missing: Vec<String> = required
            .iter()
            .filter(|k| !out.contains_key(**k))
            .map(|k| format!("`{k}=`"))
            .collect();
        if !missing.is_empty() {
            return Err(self.error("missing parameter", missing.join(", ")));
        }
        Ok(out)
    }
}

fn take(map: &mut HashMap<String, Affine>, key: &str) -> Affine {
    map.remove(key).expect("required parameter checked by Line::params")
}

fn constant_param(line: &Line, map: &mut HashMap<String, Affine>, key: &str, default: Option<f64>) -> Result<f64> {
    match map.remove(key) {
        None => Ok(default.expect("required parameter checked by Line::params")),
        Some(a) => a.as_constant().ok_or_else(|| Error::Semantic {
            line: line.no,
            message: format!("`{key}` must be a constant"),
        }),
    }
}

const STATEMENTS: &str = "`modes`, `init`, a gate, a channel, `kerr` or `label = <measurement>`";

/// Parses circuit source text.
pub fn parse(text: &str) -> Result<CircuitIR> {
    let mut ir: Option<CircuitIR> = None;
    let mut initialized = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let mut line = lex(idx + 1, raw)?;
        if *line.peek() == Tok::End {
            continue;
        }
        let no = line.no;
        let semantic = |message: String| Error::Semantic { line: no, message };

        if matches!(line.peek_at(1), Tok::Sym('=')) {
            let label = line.ident("measurement label")?;
            line.next();
            let circuit = ir.as_mut().ok_or_else(|| semantic("`modes N` must come first".into()))?;
            if label == "pi" {
                return Err(semantic("`pi` is reserved and cannot be a label".into()));
            }
            let kind = line.ident("`homodyne`, `heterodyne`, `vacproj` or `photoncount`")?;
            let measurement = match kind.as_str() {
                "homodyne" => {
                    let mode = line.mode()?;
                    let mut p = line.params(&["angle"], &["eff"])?;
                    Measurement::Homodyne {
                        mode,
                        angle: constant_param(&line, &mut p, "angle", None)?,
                        efficiency: constant_param(&line, &mut p, "eff", Some(1.0))?,
                    }
                }
                "heterodyne" => {
                    let mode = line.mode()?;
                    line.expect_end()?;
                    Measurement::Heterodyne { mode }
                }
                "photoncount" => {
                    let mode = line.mode()?;
                    line.expect_end()?;
                    Measurement::PhotonCount { mode }
                }
                "vacproj" => {
                    let mut modes = vec![line.mode()?];
                    while line.at_mode() {
                        modes.push(line.mode()?);
                    }
                    line.expect_end()?;
                    Measurement::VacuumProjection { modes }
                }
                _ => {
                    line.pos -= 1;
                    return Err(line.unexpected("`homodyne`, `heterodyne`, `vacproj` or `photoncount`"));
                }
            };
            let node = Node::Measure { label, measurement };
            circuit.check_node(&node, no)?;
            circuit.nodes.push(node);
            circuit.lines.push(no);
            continue;
        }

        let keyword = line.ident(STATEMENTS)?;
        if keyword == "modes" {
            if ir.is_some() {
                return Err(semantic("`modes` given twice".into()));
            }
            let n = line.count("mode count")?;
            line.expect_end()?;
            if n == 0 {
                return Err(semantic("a circuit needs at least one mode".into()));
            }
            ir = Some(CircuitIR::new(n));
            initialized = vec![false; n];
            continue;
        }
        let circuit = ir.as_mut().ok_or_else(|| semantic("`modes N` must come first".into()))?;

        if keyword == "init" {
            let mode = line.mode()?;
            if mode >= circuit.n_modes {
                return Err(semantic(format!("unknown mode {mode}: the circuit has {} modes", circuit.n_modes)));
            }
            if initialized[mode] {
                return Err(semantic(format!("mode {mode} initialized twice")));
            }
            if !circuit.nodes.is_empty() {
                return Err(semantic("`init` lines must precede all operations".into()));
            }
            let state = match line.ident("`vacuum`, `coherent`, `squeezed` or `fock`")?.as_str() {
                "vacuum" => InitialState::Vacuum,
                "coherent" => {
                    let dx = line.signed_number()?;
                    let dp = line.signed_number()?;
                    InitialState::Coherent { dx, dp }
                }
                "squeezed" => {
                    let r = line.signed_number()?;
                    let phi = line.signed_number()?;
                    InitialState::Squeezed { r, phi }
                }
                "fock" => InitialState::Fock(line.count("photon number")?),
                _ => {
                    line.pos -= 1;
                    return Err(line.unexpected("`vacuum`, `coherent`, `squeezed` or `fock`"));
                }
            };
            line.expect_end()?;
            circuit.initial[mode] = state;
            initialized[mode] = true;
            continue;
        }

        let node = match keyword.as_str() {
            "kerr" => {
                let mode = line.mode()?;
                let mut p = line.params(&["chi"], &[])?;
                Node::Kerr {
                    mode,
                    chi: constant_param(&line, &mut p, "chi", None)?,
                }
            }
            "ps" | "sq" | "disp" | "loss" | "amp" | "noise" => {
                let mode = line.mode()?;
                let op = match keyword.as_str() {
                    "ps" => {
                        let mut p = line.params(&["theta"], &[])?;
                        Operation::PhaseShift { mode, theta: take(&mut p, "theta") }
                    }
                    "sq" => {
                        let mut p = line.params(&["r", "phi"], &[])?;
                        Operation::Squeeze { mode, r: take(&mut p, "r"), phi: take(&mut p, "phi") }
                    }
                    "disp" => {
                        let mut p = line.params(&["dx", "dp"], &[])?;
                        Operation::Displace { mode, dx: take(&mut p, "dx"), dp: take(&mut p, "dp") }
                    }
                    "loss" => {
                        let mut p = line.params(&["eta"], &[])?;
                        Operation::Loss { mode, eta: take(&mut p, "eta") }
                    }
                    "amp" => {
                        let mut p = line.params(&["gain"], &[])?;
                        Operation::Amplifier { mode, gain: take(&mut p, "gain") }
                    }
                    _ => {
                        let mut p = line.params(&["yxx", "yxp", "ypp"], &[])?;
                        Operation::Noise {
                            mode,
                            yxx: take(&mut p, "yxx"),
                            yxp: take(&mut p, "yxp"),
                            ypp: take(&mut p, "ypp"),
                        }
                    }
                };
                op_node(op)
            }
            "bs" | "tms" => {
                let m1 = line.mode()?;
                let m2 = line.mode()?;
                let op = if keyword == "bs" {
                    let mut p = line.params(&["theta", "phi"], &[])?;
                    Operation::Beamsplitter { m1, m2, theta: take(&mut p, "theta"), phi: take(&mut p, "phi") }
                } else {
                    let mut p = line.params(&["r"], &[])?;
                    Operation::TwoModeSqueeze { m1, m2, r: take(&mut p, "r") }
                };
                op_node(op)
            }
            _ => {
                line.pos = 0;
                return Err(line.unexpected(STATEMENTS));
            }
        };
        circuit.check_node(&node, no)?;
        circuit.nodes.push(node);
        circuit.lines.push(no);
    }
    ir.ok_or_else(|| Error::Semantic {
        line: text.lines().count().max(1),
        message: "missing `modes N` statement".into(),
    })
}

fn op_node(op: Operation) -> Node {
    if op.depends_on_outcomes() {
        Node::Feedforward(op)
    } else {
        Node::Op(op)
    }
}
