//! Human and structured renderings of results.
//!
//! Structured output is JSON. Every float is written with 17 significant
//! digits (`{:.16e}`), which round-trips `f64` exactly, so the same run
//! always produces the same bytes.

use std::fmt::Write as _;
use std::io;

use serde::ser::Serialize;
use serde::{Deserialize, Serialize as SerializeDerive};
use serde_json::ser::{Formatter, PrettyFormatter};

use super::classify::SimulatabilityReport;
use super::execute::{Backend, RunResult, ShotStatistics};
use crate::error::{Error, Result};
use crate::fock::ComparisonReport;
use crate::measurement::Outcome;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct VectorDoc {
    pub len: usize,
    pub data: Vec<f64>,
}

/// Row-major matrix.
#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct MatrixDoc {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct OutcomeDoc {
    pub label: String,
    pub kind: String,
    /// Numeric outcome; absent for the no-absorption branch.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub branch: Option<String>,
    pub density_or_prob: f64,
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct StateDoc {
    pub modes: Vec<usize>,
    pub mean: VectorDoc,
    pub cov: MatrixDoc,
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct TruncationDoc {
    pub cutoff: usize,
    pub top_population: f64,
    pub leaked_trace: f64,
    pub healthy: bool,
}

/// Serialized form of a [`RunResult`].
#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
pub struct RunDocument {
    pub schema_version: u32,
    pub seed: u64,
    pub backend: String,
    pub postselection_probability: f64,
    pub outcomes: Vec<OutcomeDoc>,
    pub final_state: StateDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<TruncationDoc>,
}

impl RunDocument {
    pub fn from_result(r: &RunResult) -> Self {
        let (mean, cov) = (r.final_state.mean(), r.final_state.cov());
        let outcomes = r
            .records
            .iter()
            .map(|rec| OutcomeDoc {
                label: rec.label.clone(),
                kind: rec.kind.name().to_string(),
                values: rec.values().map(<[f64]>::to_vec),
                branch: matches!(rec.outcome, Outcome::NoAbsorption).then(|| "no_absorption".to_string()),
                density_or_prob: rec.density_or_prob,
            })
            .collect();
        let truncation = match (r.backend, r.truncation) {
            (Backend::Fock { cutoff }, Some(h)) => Some(TruncationDoc {
                cutoff,
                top_population: h.top_population,
                leaked_trace: h.leaked_trace,
                healthy: h.healthy,
            }),
            _ => None,
        };
        Self {
            schema_version: SCHEMA_VERSION,
            seed: r.seed,
            backend: r.backend.name().to_string(),
            postselection_probability: r.postselection_probability,
            outcomes,
            final_state: StateDoc {
                modes: r.modes.clone(),
                mean: VectorDoc {
                    len: mean.len(),
                    data: mean.iter().copied().collect(),
                },
                cov: MatrixDoc {
                    rows: cov.nrows(),
                    cols: cov.ncols(),
                    data: cov.transpose().iter().copied().collect(),
                },
            },
            truncation,
        }
    }

    /// Parses and checks a structured run document.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("bad run document: {e}")))?;
        if doc.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidArgument(format!("unsupported schema version {}", doc.schema_version)));
        }
        let s = &doc.final_state;
        if s.mean.len != s.mean.data.len()
            || s.cov.rows * s.cov.cols != s.cov.data.len()
            || s.cov.rows != s.mean.len
            || s.mean.len != 2 * s.modes.len()
        {
            return Err(Error::InvalidArgument("run document dimensions disagree".into()));
        }
        Ok(doc)
    }
}

/// Pretty JSON with fixed 17-significant-digit floats.
struct FixedFloats<'a>(PrettyFormatter<'a>);

impl Formatter for FixedFloats<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(w, "{value:.16e}")
        } else {
            w.write_all(b"null")
        }
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes any value as pretty JSON with lossless floats.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloats(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("in-memory serialization cannot fail");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

pub fn run_json(r: &RunResult) -> String {
    to_json(&RunDocument::from_result(r))
}

fn g6(v: f64) -> String {
    format!("{v:>13.5e}")
}

fn row(values: impl IntoIterator<Item = f64>) -> String {
    values.into_iter().map(g6).collect::<Vec<_>>().join(" ")
}

pub fn run_human(r: &RunResult) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "backend: {}", r.backend.name());
    if let Backend::Fock { cutoff } = r.backend {
        let _ = writeln!(s, "cutoff: {cutoff}");
    }
    let _ = writeln!(s, "seed: {}", r.seed);
    let _ = writeln!(s, "post-selection probability: {}", g6(r.postselection_probability).trim());
    if r.records.is_empty() {
        let _ = writeln!(s, "outcomes: none");
    } else {
        let _ = writeln!(s, "outcomes:");
        let width = r.records.iter().map(|rec| rec.label.len()).max().unwrap_or(0);
        for rec in &r.records {
            let value = match &rec.outcome {
                Outcome::Values(v) => row(v.iter().copied()),
                Outcome::NoAbsorption => "no absorption".to_string(),
            };
            let _ = writeln!(
                s,
                "  {:<width$}  {:<18} {}   p/density {}",
                rec.label,
                rec.kind.name(),
                value,
                g6(rec.density_or_prob).trim()
            );
        }
    }
    let modes: Vec<String> = r.modes.iter().map(usize::to_string).collect();
    if modes.is_empty() {
        let _ = writeln!(s, "final state: all modes measured");
    } else {
        let _ = writeln!(s, "final state (modes {}):", modes.join(", "));
        let _ = writeln!(s, "  mean:");
        let _ = writeln!(s, "    {}", row(r.final_state.mean().iter().copied()));
        let _ = writeln!(s, "  covariance:");
        let cov = r.final_state.cov();
        for i in 0..cov.nrows() {
            let _ = writeln!(s, "    {}", row(cov.row(i).iter().copied()));
        }
    }
    if let Some(h) = r.truncation {
        let _ = writeln!(
            s,
            "truncation: {} (top-level population {:.3e}, leaked trace {:.3e})",
            if h.healthy { "healthy" } else { "UNHEALTHY" },
            h.top_population,
            h.leaked_trace
        );
    }
    s
}

#[derive(SerializeDerive)]
struct WitnessDoc<'a> {
    site: String,
    kind: &'a str,
    reason: &'a str,
}

#[derive(SerializeDerive)]
struct ClassifyDoc<'a> {
    schema_version: u32,
    verdict: &'a str,
    matched_row: Option<u8>,
    witnesses: Vec<WitnessDoc<'a>>,
}

pub fn classify_json(r: &SimulatabilityReport) -> String {
    to_json(&ClassifyDoc {
        schema_version: SCHEMA_VERSION,
        verdict: r.verdict.name(),
        matched_row: r.matched_row,
        witnesses: r
            .witnesses
            .iter()
            .map(|w| WitnessDoc {
                site: w.site.to_string(),
                kind: w.kind.name(),
                reason: &w.reason,
            })
            .collect(),
    })
}

pub fn classify_human(r: &SimulatabilityReport) -> String {
    format!("{r}\n")
}

#[derive(SerializeDerive)]
struct LabelDoc<'a> {
    label: &'a str,
    count: usize,
    mean: &'a [f64],
    variance: &'a [f64],
}

#[derive(SerializeDerive)]
struct ShotsDoc<'a> {
    schema_version: u32,
    seed: u64,
    shots: u64,
    mean_postselection_probability: f64,
    labels: Vec<LabelDoc<'a>>,
}

pub fn shots_json(seed: u64, s: &ShotStatistics) -> String {
    to_json(&ShotsDoc {
        schema_version: SCHEMA_VERSION,
        seed,
        shots: s.shots,
        mean_postselection_probability: s.mean_postselection_probability,
        labels: s
            .labels
            .iter()
            .map(|(label, st)| LabelDoc {
                label,
                count: st.samples.len(),
                mean: &st.mean,
                variance: &st.variance,
            })
            .collect(),
    })
}

pub fn shots_human(seed: u64, s: &ShotStatistics) -> String {
    let mut out = format!("seed: {seed}\nshots: {}\n", s.shots);
    let _ = writeln!(out, "mean post-selection probability: {}", g6(s.mean_postselection_probability).trim());
    let width = s.labels.keys().map(String::len).max().unwrap_or(0).max(5);
    let _ = writeln!(out, "  {:<width$}  {:>13} {:>13}", "label", "mean", "variance");
    for (label, st) in &s.labels {
        for (c, (m, v)) in st.mean.iter().zip(&st.variance).enumerate() {
            let name = match st.mean.len() {
                1 => label.clone(),
                _ => format!("{label}.{}", ["x", "p"][c]),
            };
            let _ = writeln!(out, "  {name:<width$}  {} {}", g6(*m), g6(*v));
        }
    }
    out
}

#[derive(SerializeDerive)]
struct CompareDoc {
    schema_version: u32,
    verdict: &'static str,
    mean_deviation: f64,
    cov_deviation: f64,
    tolerance: f64,
    top_population: f64,
    leaked_trace: f64,
}

pub fn compare_json(r: &ComparisonReport) -> String {
    use crate::fock::Verdict;
    to_json(&CompareDoc {
        schema_version: SCHEMA_VERSION,
        verdict: match r.verdict {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        },
        mean_deviation: r.mean_deviation,
        cov_deviation: r.cov_deviation,
        tolerance: r.tolerance,
        top_population: r.health.top_population,
        leaked_trace: r.health.leaked_trace,
    })
}
