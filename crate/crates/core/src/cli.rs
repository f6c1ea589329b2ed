//! Command-line front end. The `gaussim` binary is a thin wrapper around
//! [`main_with_args`].
//!
//! Exit codes: 0 success, 2 parse or semantic error, 3 refusal to run a
//! non-Gaussian circuit on the Gaussian engine, 4 numerical or runtime
//! error, 5 usage error.

use std::collections::HashMap;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bench;
use crate::circuit::{self, report, Backend, CircuitIR, ExecOptions};
use crate::error::Error;
use crate::fock::{self, DEFAULT_CUTOFF, MAX_MODES};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_REFUSAL: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;
pub const EXIT_USAGE: i32 = 5;

#[derive(Parser, Debug)]
#[command(name = "gaussim", version, about = "Gaussian optical circuit simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Execute one shot and print the result.
    Run(RunArgs),
    /// Print the simulatability verdict and its witnesses.
    Classify(ClassifyArgs),
    /// Execute many shots and print outcome statistics.
    Sample(SampleArgs),
    /// Run the Gaussian engine and the Fock oracle and compare moments.
    Compare(CompareArgs),
    /// Time execution on random circuits and fit the scaling exponent.
    Bench(BenchArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Human,
    Structured,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum BackendArg {
    Gaussian,
    Fock,
}

#[derive(Args, Debug)]
struct Common {
    /// Circuit source file.
    input: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Forced outcome, `label=value` or `label=x,p` for heterodyne.
    #[arg(long = "force", value_name = "LABEL=VALUE")]
    force: Vec<String>,
    #[arg(long, value_enum, default_value_t = Format::Human)]
    format: Format,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value_t = BackendArg::Gaussian)]
    backend: BackendArg,
    /// Fock-space cutoff per mode (fock backend only).
    #[arg(long)]
    cutoff: Option<usize>,
}

#[derive(Args, Debug)]
struct ClassifyArgs {
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Human)]
    format: Format,
}

#[derive(Args, Debug)]
struct SampleArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long)]
    shots: u64,
    /// Worker threads; defaults to the environment cap or the core count.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = DEFAULT_CUTOFF)]
    cutoff: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_values_t = bench::DEFAULT_SIZES)]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Human)]
    format: Format,
}

struct Failure {
    code: i32,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Syntax { .. } | Error::Semantic { .. } => EXIT_PARSE,
            Error::Refusal { .. } => EXIT_REFUSAL,
            _ => EXIT_NUMERICAL,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn load(path: &PathBuf) -> Result<CircuitIR, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(circuit::parse(&text)?)
}

fn forced_outcomes(ir: &CircuitIR, specs: &[String]) -> Result<HashMap<String, Vec<f64>>, Failure> {
    let mut out = HashMap::new();
    for spec in specs {
        let (label, value) = spec
            .split_once('=')
            .ok_or_else(|| usage(format!("--force expects LABEL=VALUE, got `{spec}`")))?;
        let values = value
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|_| usage(format!("--force value `{value}` is not a number list")))?;
        let m = ir
            .measurement(label)
            .ok_or_else(|| usage(format!("--force refers to unknown label `{label}`")))?;
        if m.outcome_len() == 0 {
            return Err(usage(format!("`{label}` is a vacuum projection and cannot be forced")));
        }
        if values.len() != m.outcome_len() || values.iter().any(|v| !v.is_finite()) {
            return Err(usage(format!("`{label}` needs {} finite value(s)", m.outcome_len())));
        }
        if out.insert(label.to_string(), values).is_some() {
            return Err(usage(format!("`{label}` forced twice")));
        }
    }
    Ok(out)
}

fn backend(ir: &CircuitIR, args: &RunArgs) -> Result<Backend, Failure> {
    match (args.backend, args.cutoff) {
        (BackendArg::Gaussian, Some(_)) => Err(usage("--cutoff applies only to --backend fock")),
        (BackendArg::Gaussian, None) => Ok(Backend::Gaussian),
        (BackendArg::Fock, cutoff) => {
            if ir.n_modes > MAX_MODES {
                return Err(usage(format!(
                    "the fock backend handles at most {MAX_MODES} modes; the circuit has {}",
                    ir.n_modes
                )));
            }
            Ok(Backend::Fock {
                cutoff: cutoff.unwrap_or(DEFAULT_CUTOFF),
            })
        }
    }
}

fn run(args: &RunArgs) -> Result<String, Failure> {
    let ir = load(&args.common.input)?;
    let opts = ExecOptions {
        backend: backend(&ir, args)?,
        forced: forced_outcomes(&ir, &args.common.force)?,
        shot: 0,
    };
    let result = circuit::execute(&ir, args.common.seed, &opts)?;
    Ok(match args.common.format {
        Format::Human => report::run_human(&result),
        Format::Structured => report::run_json(&result),
    })
}

fn classify(args: &ClassifyArgs) -> Result<String, Failure> {
    let ir = load(&args.input)?;
    let r = circuit::classify(&ir);
    Ok(match args.format {
        Format::Human => report::classify_human(&r),
        Format::Structured => report::classify_json(&r),
    })
}

fn sample(args: &SampleArgs) -> Result<String, Failure> {
    if args.shots == 0 {
        return Err(usage("--shots must be positive"));
    }
    if args.workers == Some(0) {
        return Err(usage("--workers must be positive"));
    }
    let ir = load(&args.run.common.input)?;
    let opts = ExecOptions {
        backend: backend(&ir, &args.run)?,
        forced: forced_outcomes(&ir, &args.run.common.force)?,
        shot: 0,
    };
    let workers = args.workers.unwrap_or_else(circuit::execute::default_workers);
    let seed = args.run.common.seed;
    let stats = circuit::run_shots(&ir, seed, args.shots, workers, &opts)?;
    Ok(match args.run.common.format {
        Format::Human => report::shots_human(seed, &stats),
        Format::Structured => report::shots_json(seed, &stats),
    })
}

/// Runs the Gaussian engine, then replays its outcomes on the oracle so
/// both backends condition on the same values.
fn compare(args: &CompareArgs) -> Result<String, Failure> {
    let ir = load(&args.common.input)?;
    if ir.n_modes > MAX_MODES {
        return Err(usage(format!("compare handles at most {MAX_MODES} modes")));
    }
    let forced = forced_outcomes(&ir, &args.common.force)?;
    let opts = ExecOptions {
        forced,
        ..ExecOptions::default()
    };
    let gauss = circuit::execute(&ir, args.common.seed, &opts)?;
    let mut replay = ExecOptions::with_backend(Backend::Fock { cutoff: args.cutoff });
    for rec in &gauss.records {
        if let Some(v) = rec.values() {
            replay.forced.insert(rec.label.clone(), v.to_vec());
        }
    }
    let (_, oracle) = circuit::execute_fock(&ir, args.common.seed, &replay)?;
    let r = fock::compare(&gauss.final_state, &oracle, args.tol);
    Ok(match args.common.format {
        Format::Human => format!("{r}\n"),
        Format::Structured => report::compare_json(&r),
    })
}

fn bench_cmd(args: &BenchArgs) -> Result<String, Failure> {
    let r = bench::run(&args.sizes, args.repeats, args.seed)?;
    Ok(match args.format {
        Format::Human => {
            let mut s = format!("{:>6} {:>7} {:>13}\n", "modes", "gates", "seconds");
            for p in &r.points {
                s += &format!("{:>6} {:>7} {:>13.5e}\n", p.n_modes, p.gates, p.seconds);
            }
            s + &format!("log-log slope: {:.3}\n", r.slope)
        }
        Format::Structured => {
            #[derive(serde::Serialize)]
            struct Point {
                n_modes: usize,
                gates: usize,
                seconds: f64,
            }
            #[derive(serde::Serialize)]
            struct Doc {
                schema_version: u32,
                points: Vec<Point>,
                slope: f64,
            }
            report::to_json(&Doc {
                schema_version: report::SCHEMA_VERSION,
                points: r
                    .points
                    .iter()
                    .map(|p| Point {
                        n_modes: p.n_modes,
                        gates: p.gates,
                        seconds: p.seconds,
                    })
                    .collect(),
                slope: r.slope,
            })
        }
    })
}

/// Parses `args` (including the program name), runs the command and
/// returns the exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Run(a) => run(a),
        Command::Classify(a) => classify(a),
        Command::Sample(a) => sample(a),
        Command::Compare(a) => compare(a),
        Command::Bench(a) => bench_cmd(a),
    };
    match result {
        Ok(text) => {
            let _ = out.write_all(text.as_bytes());
            EXIT_OK
        }
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}
