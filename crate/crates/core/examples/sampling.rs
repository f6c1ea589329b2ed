//! Many-shot homodyne statistics, independent of the worker count.

use gaussim::circuit::{parse, run_shots, ExecOptions};

fn main() -> gaussim::error::Result<()> {
    let ir = parse("modes 1\nsq 0 r=0.4 phi=0\nx = homodyne 0 angle=0")?;
    let one = run_shots(&ir, 11, 20_000, 1, &ExecOptions::default())?;
    let four = run_shots(&ir, 11, 20_000, 4, &ExecOptions::default())?;
    let x = &one.labels["x"];
    println!("x: mean {:+.4}, variance {:.4} (expected {:.4})", x.mean[0], x.variance[0], (-0.8f64).exp());
    println!("1 and 4 workers agree exactly: {}", one == four);
    Ok(())
}
