//! Runs the teleportation circuit with sampled and with forced outcomes.

use gaussim::circuit::{execute, parse, report, ExecOptions};

const SOURCE: &str = include_str!("../circuits/teleport.circ");

fn main() -> gaussim::error::Result<()> {
    let ir = parse(SOURCE)?;
    let sampled = execute(&ir, 7, &ExecOptions::default())?;
    print!("{}", report::run_human(&sampled));

    // With zero outcomes the feedforward does nothing.
    let forced = execute(&ir, 0, &ExecOptions::default().force("u", &[0.0]).force("v", &[0.0]))?;
    println!("output mean with u = v = 0: {:.4?}", forced.final_state.mean().as_slice());
    Ok(())
}
