//! Circuit execution on the Gaussian engine or the Fock oracle.

use std::collections::{BTreeMap, HashMap};

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::classify::{classify, Site};
use super::ir::{CircuitIR, InitialState, Measurement, Node, Operation};
use crate::channel::GaussianChannel;
use crate::error::{Error, Result};
use crate::fock::{FockState, TruncationHealth, DEFAULT_CUTOFF};
use crate::measurement::{self, MeasurementKind, MeasurementRecord, Outcome, OutcomeSource};
use crate::rng;
use crate::state::GaussianState;
use crate::symplectic::SymplecticOp;

/// Environment variable capping the number of shot workers.
pub const WORKERS_ENV: &str = "GAUSSIM_WORKERS";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Gaussian,
    Fock { cutoff: usize },
}

impl Backend {
    pub fn name(self) -> &'static str {
        match self {
            Self::Gaussian => "gaussian",
            Self::Fock { .. } => "fock",
        }
    }

    pub fn fock() -> Self {
        Self::Fock { cutoff: DEFAULT_CUTOFF }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecOptions {
    pub backend: Backend,
    /// Outcome overrides by label; each vector has the outcome's length.
    pub forced: HashMap<String, Vec<f64>>,
    /// Shot index, used to select the random streams.
    pub shot: u64,
}

impl Default for ExecOptions {
    fn default() -> Self {
        Self {
            backend: Backend::Gaussian,
            forced: HashMap::new(),
            shot: 0,
        }
    }
}

impl ExecOptions {
    pub fn with_backend(backend: Backend) -> Self {
        Self { backend, ..Self::default() }
    }

    pub fn force(mut self, label: &str, values: &[f64]) -> Self {
        self.forced.insert(label.to_string(), values.to_vec());
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub seed: u64,
    pub backend: Backend,
    /// Circuit indices of the unmeasured modes, in state order.
    pub modes: Vec<usize>,
    pub records: Vec<MeasurementRecord>,
    /// Product of the no-absorption probabilities of all `vacproj` nodes.
    pub postselection_probability: f64,
    /// Final moments. For the Fock backend these are the oracle's moments.
    pub final_state: GaussianState,
    /// Truncation health of the oracle state (Fock backend only).
    pub truncation: Option<TruncationHealth>,
}

impl RunResult {
    pub fn record(&self, label: &str) -> Option<&MeasurementRecord> {
        self.records.iter().find(|r| r.label == label)
    }
}

/// Attaches the failing node to numerical and argument errors.
fn at(site: Site) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::InvalidArgument(m) => Error::InvalidArgument(format!("{site}: {m}")),
        Error::Numerical(m) => Error::Numerical(format!("{site}: {m}")),
        Error::InvalidOperator(m) => Error::InvalidOperator(format!("{site}: {m}")),
        Error::Wiring(m) => Error::Wiring(format!("{site}: {m}")),
        other => other,
    }
}

fn check_forced(ir: &CircuitIR, opts: &ExecOptions) -> Result<()> {
    for (label, values) in &opts.forced {
        let m = ir
            .measurement(label)
            .ok_or_else(|| Error::InvalidArgument(format!("forced outcome for unknown label {label}")))?;
        if m.outcome_len() == 0 {
            return Err(Error::InvalidArgument(format!(
                "{label} is a vacuum projection; its branch is fixed"
            )));
        }
        if values.len() != m.outcome_len() {
            return Err(Error::InvalidArgument(format!(
                "forced outcome for {label} needs {} value(s), got {}",
                m.outcome_len(),
                values.len()
            )));
        }
    }
    Ok(())
}

/// Runs one shot of `ir`.
pub fn execute(ir: &CircuitIR, seed: u64, opts: &ExecOptions) -> Result<RunResult> {
    match opts.backend {
        Backend::Gaussian => execute_gaussian(ir, seed, opts),
        Backend::Fock { .. } => execute_fock(ir, seed, opts).map(|(r, _)| r),
    }
}

struct Run<'a> {
    seed: u64,
    opts: &'a ExecOptions,
    alive: Vec<usize>,
    outcomes: HashMap<String, Vec<f64>>,
    records: Vec<MeasurementRecord>,
    postselection: f64,
}

impl<'a> Run<'a> {
    fn new(ir: &'a CircuitIR, seed: u64, opts: &'a ExecOptions) -> Result<Self> {
        check_forced(ir, opts)?;
        Ok(Self {
            seed,
            opts,
            alive: (0..ir.n_modes).collect(),
            outcomes: HashMap::new(),
            records: Vec::new(),
            postselection: 1.0,
        })
    }

    /// Position of circuit mode `m` in the current state.
    fn index(&self, m: usize) -> usize {
        self.alive.binary_search(&m).expect("validated IR never touches a measured mode")
    }

    fn rng(&self, label: &str) -> rng::StreamRng {
        rng::stream(self.seed, label, self.opts.shot)
    }

    fn forced(&self, label: &str) -> Option<&'a [f64]> {
        self.opts.forced.get(label).map(Vec::as_slice)
    }

    fn eval(&self, op: &Operation) -> Result<Vec<f64>> {
        op.params().iter().map(|(_, a)| a.eval(&self.outcomes)).collect()
    }

    fn finish_measurement(&mut self, record: MeasurementRecord, modes: &[usize]) {
        if let Some(v) = record.values() {
            self.outcomes.insert(record.label.clone(), v.to_vec());
        }
        if record.kind == MeasurementKind::VacuumProjection {
            self.postselection *= record.density_or_prob;
        }
        self.records.push(record);
        self.alive.retain(|m| !modes.contains(m));
    }

    fn finish(self, backend: Backend, final_state: GaussianState, truncation: Option<TruncationHealth>) -> RunResult {
        RunResult {
            seed: self.seed,
            backend,
            modes: self.alive,
            records: self.records,
            postselection_probability: self.postselection,
            final_state,
            truncation,
        }
    }
}

fn apply_gaussian(state: &mut GaussianState, op: &Operation, p: &[f64], idx: &dyn Fn(usize) -> usize) -> Result<()> {
    match *op {
        Operation::PhaseShift { mode, .. } => SymplecticOp::phase_shift(idx(mode), p[0])?.apply_to(state),
        Operation::Beamsplitter { m1, m2, .. } => {
            SymplecticOp::beamsplitter(idx(m1), idx(m2), p[0], p[1])?.apply_to(state)
        }
        Operation::Squeeze { mode, .. } => SymplecticOp::squeeze(idx(mode), p[0], p[1])?.apply_to(state),
        Operation::TwoModeSqueeze { m1, m2, .. } => {
            SymplecticOp::two_mode_squeeze(idx(m1), idx(m2), p[0])?.apply_to(state)
        }
        Operation::Displace { mode, .. } => SymplecticOp::displace(idx(mode), p[0], p[1])?.apply_to(state),
        Operation::Loss { mode, .. } => GaussianChannel::loss(idx(mode), p[0])?.apply_to(state),
        Operation::Amplifier { mode, .. } => GaussianChannel::amplifier(idx(mode), p[0])?.apply_to(state),
        Operation::Noise { mode, .. } => {
            let y = DMatrix::from_row_slice(2, 2, &[p[0], p[1], p[1], p[2]]);
            GaussianChannel::additive_noise(idx(mode), y)?.apply_to(state)
        }
    }
}

/// Runs `ir` on the Gaussian engine. Any non-Gaussian element is refused
/// before the state is touched.
pub fn execute_gaussian(ir: &CircuitIR, seed: u64, opts: &ExecOptions) -> Result<RunResult> {
    let report = classify(ir);
    if let Some(w) = report.first_witness() {
        return Err(Error::Refusal {
            node: format!("{} ({})", w.site, w.kind.name()),
            reason: w.reason.clone(),
        });
    }
    let mut run = Run::new(ir, seed, opts)?;
    let mut state = GaussianState::vacuum(ir.n_modes)?;
    for (mode, init) in ir.initial.iter().enumerate() {
        let site = Site::Input { mode };
        match *init {
            InitialState::Coherent { dx, dp } => SymplecticOp::displace(mode, dx, dp)?.apply_to(&mut state),
            InitialState::Squeezed { r, phi } => SymplecticOp::squeeze(mode, r, phi)?.apply_to(&mut state),
            InitialState::Vacuum | InitialState::Fock(_) => Ok(()),
        }
        .map_err(at(site))?;
    }
    for (index, node) in ir.nodes.iter().enumerate() {
        let site = Site::Node { index, line: ir.line_of(index) };
        match node {
            Node::Op(op) | Node::Feedforward(op) => {
                let p = run.eval(op).map_err(at(site))?;
                let idx = |m| run.index(m);
                apply_gaussian(&mut state, op, &p, &idx).map_err(at(site))?;
            }
            Node::Measure { label, measurement } => {
                let modes = measurement.modes();
                let mut rng = run.rng(label);
                let source = match run.forced(label) {
                    Some(v) => OutcomeSource::Forced(v),
                    None => OutcomeSource::Sample(&mut rng),
                };
                let (record, post) = match *measurement {
                    Measurement::Homodyne { mode, angle, efficiency } => {
                        measurement::homodyne(&state, run.index(mode), angle, efficiency, source, label)
                    }
                    Measurement::Heterodyne { mode } => measurement::heterodyne(&state, run.index(mode), source, label),
                    Measurement::VacuumProjection { ref modes } => {
                        let idx: Vec<usize> = modes.iter().map(|&m| run.index(m)).collect();
                        measurement::condition_on_no_absorption(&state, &idx, label)
                    }
                    Measurement::PhotonCount { .. } => unreachable!("refused above"),
                }
                .map_err(at(site))?;
                state = post;
                run.finish_measurement(record, &modes);
            }
            Node::Kerr { .. } => unreachable!("refused above"),
        }
    }
    Ok(run.finish(Backend::Gaussian, state, None))
}

/// Runs `ir` on the Fock oracle and also returns the final oracle state.
pub fn execute_fock(ir: &CircuitIR, seed: u64, opts: &ExecOptions) -> Result<(RunResult, FockState)> {
    let cutoff = match opts.backend {
        Backend::Fock { cutoff } => cutoff,
        Backend::Gaussian => DEFAULT_CUTOFF,
    };
    let mut run = Run::new(ir, seed, opts)?;
    let occupations: Vec<usize> = ir
        .initial
        .iter()
        .map(|s| match *s {
            InitialState::Fock(n) => n,
            _ => 0,
        })
        .collect();
    let mut state = FockState::number_state(cutoff, &occupations)?;
    for (mode, init) in ir.initial.iter().enumerate() {
        match *init {
            InitialState::Coherent { dx, dp } => state.displace(mode, dx, dp),
            InitialState::Squeezed { r, phi } => state.squeeze(mode, r, phi),
            InitialState::Vacuum | InitialState::Fock(_) => Ok(()),
        }
        .map_err(at(Site::Input { mode }))?;
    }
    for (index, node) in ir.nodes.iter().enumerate() {
        let site = Site::Node { index, line: ir.line_of(index) };
        match node {
            Node::Op(op) | Node::Feedforward(op) => {
                let p = run.eval(op).map_err(at(site))?;
                let i = |m| run.index(m);
                match *op {
                    Operation::PhaseShift { mode, .. } => state.phase_shift(i(mode), p[0]),
                    Operation::Beamsplitter { m1, m2, .. } => state.beamsplitter(i(m1), i(m2), p[0], p[1]),
                    Operation::Squeeze { mode, .. } => state.squeeze(i(mode), p[0], p[1]),
                    Operation::TwoModeSqueeze { m1, m2, .. } => state.two_mode_squeeze(i(m1), i(m2), p[0]),
                    Operation::Displace { mode, .. } => state.displace(i(mode), p[0], p[1]),
                    Operation::Loss { mode, .. } => state.apply_loss(i(mode), p[0]),
                    Operation::Amplifier { mode, .. } => state.apply_amplifier(i(mode), p[0]),
                    Operation::Noise { mode, .. } => state.apply_additive_noise(i(mode), p[0], p[1], p[2]),
                }
                .map_err(at(site))?;
            }
            Node::Kerr { mode, chi } => state.kerr(run.index(*mode), *chi).map_err(at(site))?,
            Node::Measure { label, measurement } => {
                let modes = measurement.modes();
                let forced = run.forced(label);
                let mut rng = run.rng(label);
                let (record, post) = match *measurement {
                    Measurement::Homodyne { mode, angle, efficiency } => {
                        let i = run.index(mode);
                        let x = match forced {
                            Some(v) => v[0],
                            None => state.sample_homodyne(&mut rng, i, angle, efficiency)?,
                        };
                        let (density, post) = state.condition_homodyne(i, angle, efficiency, x)?;
                        (record(label, MeasurementKind::Homodyne, vec![x], density), post)
                    }
                    Measurement::Heterodyne { mode } => {
                        let i = run.index(mode);
                        let m = match forced {
                            Some(v) => [v[0], v[1]],
                            None => state.sample_heterodyne(&mut rng, i)?,
                        };
                        let (density, post) = state.condition_heterodyne(i, m)?;
                        (record(label, MeasurementKind::Heterodyne, m.to_vec(), density), post)
                    }
                    Measurement::PhotonCount { mode } => {
                        let i = run.index(mode);
                        let n = match forced {
                            Some(v) if v[0] >= 0.0 && v[0].fract() == 0.0 => v[0] as usize,
                            Some(v) => {
                                return Err(Error::InvalidArgument(format!(
                                    "forced photon count for {label} must be a non-negative integer, got {}",
                                    v[0]
                                )))
                            }
                            None => state.sample_photon_number(&mut rng, i)?,
                        };
                        let (p, post) = state.condition_on_photon_number(i, n)?;
                        (record(label, MeasurementKind::PhotonCount, vec![n as f64], p), post)
                    }
                    Measurement::VacuumProjection { ref modes } => {
                        let idx: Vec<usize> = modes.iter().map(|&m| run.index(m)).collect();
                        let (p, post) = state.no_absorption(&idx)?;
                        let rec = MeasurementRecord {
                            label: label.clone(),
                            kind: MeasurementKind::VacuumProjection,
                            outcome: Outcome::NoAbsorption,
                            density_or_prob: p,
                        };
                        (rec, post)
                    }
                };
                state = post;
                run.finish_measurement(record, &modes);
            }
        }
    }
    let (mean, cov) = state.moments();
    let health = state.health();
    let result = run.finish(
        Backend::Fock { cutoff },
        GaussianState::from_parts_unchecked(mean, cov),
        Some(health),
    );
    Ok((result, state))
}

fn record(label: &str, kind: MeasurementKind, values: Vec<f64>, p: f64) -> MeasurementRecord {
    MeasurementRecord {
        label: label.to_string(),
        kind,
        outcome: Outcome::Values(values),
        density_or_prob: p,
    }
}

/// Samples and empirical moments of one label over many shots.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelStatistics {
    /// One outcome vector per shot, in shot order.
    pub samples: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    /// Unbiased sample variance of each component.
    pub variance: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShotStatistics {
    pub shots: u64,
    pub labels: BTreeMap<String, LabelStatistics>,
    pub mean_postselection_probability: f64,
}

/// Worker count from [`WORKERS_ENV`], else the available parallelism.
pub fn default_workers() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Executes `n_shots` independent shots on `workers` threads. Shot `i`
/// draws from the streams of shot index `i`, so results do not depend on
/// the worker count.
pub fn run_shots(
    ir: &CircuitIR,
    seed: u64,
    n_shots: u64,
    workers: usize,
    opts: &ExecOptions,
) -> Result<ShotStatistics> {
    if n_shots == 0 {
        return Err(Error::InvalidArgument("need at least one shot".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start workers: {e}")))?;
    let results: Vec<RunResult> = pool.install(|| {
        (0..n_shots)
            .into_par_iter()
            .map(|shot| {
                let o = ExecOptions {
                    shot,
                    ..opts.clone()
                };
                execute(ir, seed, &o)
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut labels = BTreeMap::new();
    for (label, m) in ir.labels() {
        if m.outcome_len() == 0 {
            continue;
        }
        let samples: Vec<Vec<f64>> = results
            .iter()
            .map(|r| r.record(label).and_then(|rec| rec.values()).map(<[f64]>::to_vec).unwrap_or_default())
            .collect();
        let k = m.outcome_len();
        let n = samples.len() as f64;
        let mean: Vec<f64> = (0..k).map(|c| samples.iter().map(|s| s[c]).sum::<f64>() / n).collect();
        let variance: Vec<f64> = (0..k)
            .map(|c| {
                if samples.len() < 2 {
                    0.0
                } else {
                    samples.iter().map(|s| (s[c] - mean[c]).powi(2)).sum::<f64>() / (n - 1.0)
                }
            })
            .collect();
        labels.insert(
            label.to_string(),
            LabelStatistics {
                samples,
                mean,
                variance,
            },
        );
    }
    let mean_postselection_probability =
        results.iter().map(|r| r.postselection_probability).sum::<f64>() / results.len() as f64;
    Ok(ShotStatistics {
        shots: n_shots,
        labels,
        mean_postselection_probability,
    })
}
